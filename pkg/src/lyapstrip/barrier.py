"""Barriers: column-constant potentials, transverse DFT decoupling and
certification of the norm / off-diagonal decay thresholds.

The transverse transform is ``xi_hat[i, w] = sum_j e(j w / W) xi[i, j]`` with
``e(x) = exp(2 pi i x)`` and no normalisation, so Parseval reads
``||xi||^2 = (1/W) sum_w ||xi_hat[:, w]||^2``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NearSingularError, PreconditionError
from .lattice import (BlockTridiagonalOperator, Interval, PotentialField, StripModel,
                      assemble_hamiltonian, sample_potential)
from .resolvent import COND_LIMIT, Resolvent, block_norms, solve, spectrum
from .schur import clopper_pearson
from .seeding import derive_seed, parallel_map

DEFAULT_C = 0.2


def lift_potential(v, W, start=0):
    """Column-constant potential ``V[i, j] = v[i]`` for every ``j``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgumentError("v must be a non-empty 1-d array")
    return PotentialField(Interval.of_size(v.size, start), np.repeat(v[:, None], W, axis=1))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    W: int
    thetas: np.ndarray
    energies: np.ndarray


def decoupled_energies(E, W):
    """Shifted energies ``E - 2 cos(2 pi theta)`` for ``theta = w / W``."""
    if int(W) != W or W < 1:
        raise InvalidArgumentError(f"width must be an integer >= 1, got {W}")
    thetas = np.arange(W) / W
    return ChannelSet(int(W), thetas, E - 2.0 * np.cos(2.0 * np.pi * thetas))


def transverse_dft(x):
    """Unnormalised transform along the ring axis (last axis)."""
    x = np.asarray(x)
    return x.shape[-1] * np.fft.ifft(x, axis=-1)


def inverse_transverse_dft(xh):
    xh = np.asarray(xh)
    return np.fft.fft(xh, axis=-1) / xh.shape[-1]


@dataclass(frozen=True, eq=False)
class VectorField:
    interval: Interval
    values: np.ndarray

    @property
    def hat(self):
        return transverse_dft(self.values)

    def norm(self):
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True, eq=False)
class DecouplingCheck:
    residual: float
    parseval_error: float
    channels: ChannelSet
    xi: VectorField
    eta: VectorField


def chain_operator(v, coupling=1.0, start=0):
    """1-d operator ``h_I`` with potential ``coupling * v`` and no ring term."""
    v = np.asarray(v, dtype=float)
    return BlockTridiagonalOperator((coupling * v)[:, None, None], Interval.of_size(v.size, start))


def _apply_channel(vv, Eprime, x):
    """``(h_I - E') x`` for vectors ``x`` stored column-wise (one per channel)."""
    out = (vv[:, None] - Eprime[None, :]) * x
    out[1:] += x[:-1]
    out[:-1] += x[1:]
    return out


def verify_decoupling(model, v, E, interval=None, probe_seed=0):
    """Solve the strip system for a random unit probe and measure how well each
    transverse Fourier mode solves its own 1-d problem at ``E'``.

    Returns the worst channel residual ``max_theta ||(h_I - E') xi_hat - eta_hat||``
    and the relative Parseval gap for the same probe.
    """
    v = np.asarray(v, dtype=float)
    if interval is None:
        interval = Interval.of_size(v.size)
    if interval.size != v.size:
        raise InvalidArgumentError("v does not match the interval")
    pot = lift_potential(v, model.width, interval.a)
    op = assemble_hamiltonian(model, pot, interval)
    ev = np.abs(spectrum(op, E))
    cond = ev.max() / ev.min() if ev.min() > 0 else np.inf
    if not cond <= COND_LIMIT:
        raise NearSingularError("strip system is near-singular", cond)
    rng = np.random.default_rng(probe_seed)
    eta = rng.standard_normal((interval.size, model.width))
    eta /= np.linalg.norm(eta)
    xi = solve(op, E, eta)
    chans = decoupled_energies(E, model.width)
    xh, eh = transverse_dft(xi), transverse_dft(eta)
    r = _apply_channel(model.coupling * v, chans.energies, xh) - eh
    residual = float(np.linalg.norm(r, axis=0).max())
    lhs = np.sum(np.abs(xi) ** 2)
    rhs = np.mean(np.sum(np.abs(xh) ** 2, axis=0))
    return DecouplingCheck(residual, float(abs(lhs - rhs) / lhs), chans,
                           VectorField(interval, xi), VectorField(interval, eta))


@dataclass(frozen=True)
class BarrierCertificate:
    """Measured quantities for one restricted operator.

    ``max_far_entry`` is the entrywise maximum of ``|G|`` over column pairs with
    ``|i - i'| > N / 10``; ``max_far_block`` is the largest block operator norm
    over the same pairs.  ``decay_mode`` says which one ``pass_decay`` uses.
    """

    N: int
    E: float
    c: float
    norm_bound: float
    max_far_entry: float
    max_far_block: float
    pass_norm: bool
    pass_decay: bool
    decay_mode: str = "entry"

    @property
    def norm_threshold(self):
        return float(np.exp(np.sqrt(self.N)))

    @property
    def decay_threshold(self):
        return float(np.exp(-self.c * self.N))

    @property
    def passed(self):
        return self.pass_norm and self.pass_decay

    @property
    def decay_value(self):
        return self.max_far_entry if self.decay_mode == "entry" else self.max_far_block

    @property
    def max_passing_c(self):
        """Largest decay constant the measured far values would still pass."""
        val = self.decay_value
        if not np.isfinite(val):
            return -np.inf
        return np.inf if val == 0 else float(-np.log(val) / self.N)

    def is_consistent(self):
        return (self.pass_norm == bool(self.norm_bound < self.norm_threshold)
                and self.pass_decay == bool(self.decay_value < self.decay_threshold))


def _far_min_distance(N):
    return int(np.floor(N / 10.0)) + 1


def _certificate(N, E, c, norm_bound, far_entry, far_block, decay_mode):
    if decay_mode not in ("entry", "block"):
        raise InvalidArgumentError(f"decay_mode must be 'entry' or 'block', got {decay_mode!r}")
    pass_norm = bool(norm_bound < np.exp(np.sqrt(N)))
    val = far_entry if decay_mode == "entry" else far_block
    pass_decay = bool(val < np.exp(-c * N))
    return BarrierCertificate(N, float(E), float(c), float(norm_bound), float(far_entry),
                              float(far_block), pass_norm, pass_decay, decay_mode)


def _far_maxima(res, dmin):
    entry = block = 0.0
    for gen in (res.upper_by_distance(), res.lower_by_distance()):
        for d, X in gen:
            if d < dmin:
                continue
            entry = max(entry, float(np.abs(X).max()))
            block = max(block, float(block_norms(X).max()))
    return entry, block


def barrier_check(op, E, c=DEFAULT_C, decay_mode="entry"):
    """Certificate for ``||G_I|| < e^sqrt(N)`` and far values ``< e^(-cN)``.

    A near-singular operator yields ``norm_bound = inf`` and failing flags.
    """
    N = op.size
    ev = np.abs(spectrum(op, E))
    lo = ev.min()
    if lo == 0 or ev.max() / lo > COND_LIMIT:
        return _certificate(N, E, c, np.inf, np.inf, np.inf, decay_mode)
    res = Resolvent(op, E, check=False)
    far_entry, far_block = _far_maxima(res, _far_min_distance(N))
    return _certificate(N, E, c, 1.0 / lo, far_entry, far_block, decay_mode)


def channel_certificate(v, W, E, c=DEFAULT_C, coupling=1.0, decay_mode="entry"):
    """Certificate assembled from the W decoupled 1-d problems.

    The norm and the far values are the maxima over channels of the 1-d
    quantities ``||(h_I - E')^{-1}||`` and ``|(h_I - E')^{-1}(i, i')|``.
    """
    v = np.asarray(v, dtype=float)
    h = chain_operator(v, coupling)
    N = v.size
    dmin = _far_min_distance(N)
    norm = far = 0.0
    for Ep in decoupled_energies(E, W).energies:
        ev = np.abs(spectrum(h, Ep))
        lo = ev.min()
        if lo == 0 or ev.max() / lo > COND_LIMIT:
            return _certificate(N, E, c, np.inf, np.inf, np.inf, decay_mode)
        norm = max(norm, 1.0 / lo)
        entry, _ = _far_maxima(Resolvent(h, Ep, check=False), dmin)
        far = max(far, entry)
    return _certificate(N, E, c, norm, far, far, decay_mode)


def perturb_and_check(model, v, tol, E, c=DEFAULT_C, trials=100, seed=0,
                      decay_mode="entry", threads=1):
    """Fraction of site-wise perturbations ``|V_ij - v_i| <= tol`` that keep
    the barrier certificate passing.

    Trial ``t`` draws ``u ~ U(-1, 1)`` on every site from its own derived
    stream and uses ``V = v + tol * u``, so different ``tol`` share the draws.
    """
    v = np.asarray(v, dtype=float)
    interval = Interval.of_size(v.size)
    base = barrier_check(assemble_hamiltonian(model, lift_potential(v, model.width), interval),
                         E, c, decay_mode)
    if not base.passed:
        raise PreconditionError("the unperturbed lifted potential does not pass the barrier check")

    def one(t):
        u = np.random.default_rng(derive_seed(seed, t)).uniform(-1.0, 1.0, (v.size, model.width))
        pot = PotentialField(interval, v[:, None] + tol * u)
        return barrier_check(assemble_hamiltonian(model, pot, interval), E, c, decay_mode).passed

    passes = parallel_map(one, range(trials), threads)
    return sum(passes) / trials


@dataclass(frozen=True)
class ProbabilityEstimate:
    probability: float
    ci_low: float
    ci_high: float
    successes: int
    trials: int


def estimate(successes, trials):
    lo, hi = clopper_pearson(successes, trials)
    return ProbabilityEstimate(successes / trials, float(lo), float(hi), int(successes), int(trials))


def barrier_probability(N, W, E, c, disorder, trials, seed, coupling=1.0,
                        decay_mode="entry", threads=1):
    """Empirical probability that an IID potential on ``[0, N-1] x Z_W`` is a barrier."""
    if trials < 100:
        raise InvalidArgumentError("barrier_probability needs trials >= 100")
    model = StripModel(W, coupling, disorder)
    interval = Interval.of_size(N)

    def one(t):
        pot = sample_potential(model, interval, derive_seed(seed, t))
        return barrier_check(assemble_hamiltonian(model, pot, interval), E, c, decay_mode).passed

    passes = parallel_map(one, range(trials), threads)
    return estimate(sum(passes), trials)
