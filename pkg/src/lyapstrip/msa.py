"""Multi-scale machinery: good intervals, the barrier chain bound, the
bootstrap step and the scale schedule (in log space).

Scales here are far beyond any native number type (``N_0 = A^{W (log W)^4}``
with a huge ``A``), so the schedule carries ``log N_s`` and ``log eps_s``
only.  ``log`` is the natural logarithm everywhere.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .barrier import estimate
from .errors import InvalidArgumentError, NearSingularError, PreconditionError
from .lattice import Interval, StripModel, assemble_hamiltonian, sample_potential
from .resolvent import Resolvent, block_norm, spectrum
from .seeding import derive_seed, parallel_map

DEFAULT_C = 0.2


# ---------------------------------------------------------------- good intervals

@dataclass(frozen=True)
class GoodIntervalReport:
    """Good sub-intervals ``I_alpha = ]alpha M, (alpha + 1) M[`` of ``[a, a + nM]``."""

    M: int
    n: int
    start: int
    good_indices: tuple
    norms: tuple
    edge_norms: tuple
    norm_threshold: float
    decay_threshold: float
    realization_seed: int = None

    @property
    def R(self):
        return len(self.good_indices)

    def sub_interval(self, alpha):
        lo = self.start + alpha * self.M
        return Interval(lo + 1, lo + self.M - 1)


def default_thresholds(M, c=DEFAULT_C, delta=None):
    """``(e^sqrt(M), e^(-cM))``, or ``(inf, e^(-delta M))`` when ``delta`` is given."""
    if delta is not None:
        return np.inf, math.exp(-delta * M)
    return math.exp(math.sqrt(M)), math.exp(-c * M)


def _interval_stats(op, E, sub):
    sub_op = op.restrict(sub)
    lo = np.abs(spectrum(sub_op, E)).min()
    if lo == 0:
        return np.inf, np.inf
    edge = block_norm(Resolvent(sub_op, E, check=False).block(sub.a, sub.b))
    return 1.0 / lo, edge


def classify_intervals(model, potential, E, M, norm_threshold=None, decay_threshold=None,
                       threads=1):
    """Mark each ``I_alpha`` good when ``||G_{I_alpha}|| < norm_threshold`` and
    ``||P_{alpha M + 1} G_{I_alpha} P_{(alpha + 1) M - 1}|| < decay_threshold``.

    Only the potential inside ``I_alpha`` enters its decision.  Thresholds
    default to ``default_thresholds(M)``.
    """
    if M < 4:
        raise InvalidArgumentError("classify_intervals needs M >= 4")
    span = potential.interval
    if (span.size - 1) % M != 0 or span.size < M + 1:
        raise InvalidArgumentError(f"potential on {span} is not of the form [a, a + nM] for M={M}")
    n = (span.size - 1) // M
    dn, dd = default_thresholds(M)
    norm_threshold = dn if norm_threshold is None else norm_threshold
    decay_threshold = dd if decay_threshold is None else decay_threshold
    op = assemble_hamiltonian(model, potential)
    subs = [Interval(span.a + al * M + 1, span.a + (al + 1) * M - 1) for al in range(n)]

    def one(sub):
        try:
            return _interval_stats(op, E, sub)
        except (np.linalg.LinAlgError, ZeroDivisionError):
            return np.inf, np.inf

    stats = parallel_map(one, subs, threads)
    good = tuple(al for al, (nm, ed) in enumerate(stats)
                 if nm < norm_threshold and ed < decay_threshold)
    return GoodIntervalReport(M, n, span.a, good, tuple(float(s[0]) for s in stats),
                              tuple(float(s[1]) for s in stats), float(norm_threshold),
                              float(decay_threshold), potential.seed)


# -------------------------------------------------------------------- chain bound

@dataclass(frozen=True)
class ChainBound:
    """``direct = ||P_a G P_b||`` on the full interval and the chain ``bound``.

    ``bound = prod_r (decay_threshold * connector_r) * final``: one factor per
    good interval, where ``connector_r = ||R G_{[a, m_r]} R||`` over the two
    columns ``{x_{r-1}, k_r M}`` and ``final`` is the same norm over
    ``{x_R, b}`` on the full interval.  ``measured_bound`` uses the measured
    barrier edge norms instead of the threshold.  ``bound = inf`` when there
    is no good interval.
    """

    direct: float
    bound: float
    measured_bound: float
    connectors: tuple
    barrier_norms: tuple
    final: float
    log_direct: float
    log_bound: float

    def __iter__(self):
        return iter((self.direct, self.bound))


def _two_column_norm(res, x, y):
    cols = [x] if x == y else [x, y]
    return float(np.linalg.norm(res.restricted(cols), 2))


def chain_bound(model, potential, E, barriers):
    """Resolvent-identity chain across the good intervals of ``barriers``."""
    span = potential.interval
    op = assemble_hamiltonian(model, potential)
    try:
        full = Resolvent(op, E)
    except NearSingularError as exc:
        raise NearSingularError(f"full-interval resolvent on {span}: {exc}", exc.condition) from None
    direct_block = full.block(span.a, span.b)
    direct = block_norm(direct_block)
    M = barriers.M
    if barriers.R == 0:
        return ChainBound(direct, np.inf, np.inf, (), (), np.nan, _log(direct), np.inf)
    log_bound = log_measured = 0.0
    connectors, edges = [], []
    x = span.a
    for k in barriers.good_indices:
        kM = span.a + k * M
        m = kM + M - 1
        sub = Resolvent(op.restrict(Interval(span.a, m)), E)
        conn = _two_column_norm(sub, x, kM)
        edge = block_norm(Resolvent(op.restrict(Interval(kM + 1, m)), E, check=False)
                          .block(kM + 1, m))
        connectors.append(conn)
        edges.append(edge)
        log_bound += math.log(barriers.decay_threshold) + _log(conn)
        log_measured += _log(edge) + _log(conn)
        x = m + 1
    final = _two_column_norm(full, x, span.b)
    log_bound += _log(final)
    log_measured += _log(final)
    return ChainBound(direct, _exp(log_bound), _exp(log_measured), tuple(connectors),
                      tuple(edges), final, _log(direct), log_bound)


def _log(x):
    return -np.inf if x == 0 else math.log(x)


def _exp(x):
    return math.exp(x) if x < 709.0 else math.inf


# ---------------------------------------------------------------- bootstrap step

@dataclass(frozen=True)
class MsaParams:
    M: int
    delta: float
    epsilon: float
    r: int
    n: int
    c: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InvalidArgumentError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.epsilon < 1:
            raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.r < 2:
            raise InvalidArgumentError(f"r must be >= 2, got {self.r}")
        if self.c <= 0:
            raise InvalidArgumentError("c must be positive")

    def log_upper(self):
        """log of ``c * exp(delta M / (4 r))``."""
        return math.log(self.c) + self.delta * self.M / (4.0 * self.r)

    def scale_condition(self, W):
        """``(lower_ok, upper_ok)`` for ``W + 1/eps < n < c e^{delta M / 4r}``."""
        lower = W + 1.0 / self.epsilon < self.n
        upper = math.log(self.n) < self.log_upper()
        return lower, upper


@dataclass(frozen=True)
class BootstrapResult:
    N: int
    eps1: float
    delta1: float

    def __iter__(self):
        return iter((self.N, self.eps1, self.delta1))


def _check_scale_condition(p, W):
    lower, upper = p.scale_condition(W)
    if not lower:
        raise PreconditionError(
            f"scale condition fails: W + 1/epsilon = {W + 1.0 / p.epsilon:.6g} is not < n = {p.n}")
    if not upper:
        raise PreconditionError(
            f"scale condition fails: n = {p.n} is not < c*exp(delta*M/(4r)) "
            f"= exp({p.log_upper():.6g}) (c = {p.c})")


# exponents like sqrt(n) log 2 or delta M / 2r reach a few hundred, so one
# rounding of the argument costs ~1e-14 relative in the result; the helpers
# below keep the argument exact (as a Fraction) and feed exp the remainder

def _sqrt_exact(x):
    """sqrt(x) to ~1e-32 relative: one Newton step from the double root."""
    s = Fraction(math.sqrt(x))
    return s + (Fraction(x) - s * s) / (2 * s)


def _exp_neg(x):
    """exp(-x) for a Fraction ``x``."""
    hi = float(x)
    return math.exp(-hi) * math.exp(-float(x - Fraction(hi)))


def _pow2_neg(x):
    """2^(-x) for a Fraction ``x``."""
    hi = float(x)
    return 2.0 ** -hi * 2.0 ** -float(x - Fraction(hi))


def next_delta(delta, sqrt_eps, r):
    return (1.0 - sqrt_eps) * (1.0 - 1.0 / r) * delta


def bootstrap_step(p, W, eps_form="stated", C=1.0):
    """One scale step ``M -> N = n M``.

    ``eps_form="stated"`` gives ``eps1 = 2^(-sqrt n) + e^(-delta M / 2r)``;
    ``"derived"`` gives the pre-simplification bound
    ``e^(-sqrt(eps) n) + C W n e^(-delta M / 2r)``.
    ``delta1 = (1 - sqrt eps)(1 - 1/r) delta`` in both cases.
    """
    _check_scale_condition(p, W)
    tail = _exp_neg(Fraction(p.delta) * p.M / (2 * p.r))
    if eps_form == "stated":
        eps1 = _pow2_neg(_sqrt_exact(p.n)) + tail
    elif eps_form == "derived":
        eps1 = _exp_neg(_sqrt_exact(p.epsilon) * p.n) + C * W * p.n * tail
    else:
        raise InvalidArgumentError(f"eps_form must be 'stated' or 'derived', got {eps_form!r}")
    return BootstrapResult(p.n * p.M, eps1, next_delta(p.delta, math.sqrt(p.epsilon), p.r))


# ---------------------------------------------------------------------- schedule

@dataclass(frozen=True)
class ScaleState:
    s: int
    log_N: float
    log_eps: float
    log_delta: float
    r: int

    @property
    def N(self):
        return math.exp(self.log_N) if self.log_N < 709 else math.inf

    @property
    def delta(self):
        return math.exp(self.log_delta)

    @property
    def eps(self):
        return math.exp(self.log_eps)


@dataclass(frozen=True)
class Schedule:
    W: int
    log_A: float
    c: float
    states: tuple
    feasible: bool
    min_feasible_log_A: float

    @property
    def log_delta0(self):
        return self.states[0].log_delta

    def delta_margin(self):
        """``log(delta_s / (delta_0 / 2))`` per stage; positive means the bound holds."""
        return [st.log_delta - self.log_delta0 + math.log(2.0) for st in self.states]

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, k):
        return self.states[k]


def initial_scale(W, log_A, c=1.0):
    """Stage 0 in log space: ``(log N0, log eps0, log delta0)``.

    ``N0 = A^{W (log W)^4}``, ``delta0 = exp(sqrt(log N0 / W)) / N0`` and
    ``eps0 = exp(-c sqrt(log N0 / W))``.
    """
    if W < 2:
        raise InvalidArgumentError("the schedule needs W >= 2 (log W > 0)")
    log_N0 = W * math.log(W) ** 4 * log_A
    root = math.sqrt(log_N0 / W)
    return log_N0, -c * root, root - log_N0


def stage0_feasible(W, log_A, c=1.0, r=10):
    """Scale condition at stage 0 with ``n = N0`` and ``r = 10``, in log space."""
    log_N0, log_eps0, log_delta0 = initial_scale(W, log_A, c)
    # log(W + 1/eps0) without overflow
    lower = max(math.log(W), -log_eps0) + math.log1p(math.exp(-abs(math.log(W) + log_eps0)))
    # delta0 * N0 = exp(sqrt(log N0 / W))
    log_upper = math.log(c) + math.exp(log_delta0 + log_N0) / (4.0 * r)
    return lower < log_N0 < log_upper


def minimal_feasible_log_A(W, c=1.0, r=10, start_log_A=math.log(2.0), max_log_A=1e6):
    """Smallest ``log A`` on the doubling ladder ``A = 2, 4, 8, ...`` passing stage 0."""
    log_A = start_log_A
    while log_A <= max_log_A:
        if stage0_feasible(W, log_A, c, r):
            return log_A
        log_A += math.log(2.0)
    raise PreconditionError(f"no feasible A up to log A = {max_log_A}")


def schedule(W, A=None, stages=10, c=1.0, log_A=None, strict=True):
    """Scale sequence ``N_{s+1} = N_s^2``, ``eps_s = 1/N_s`` (s >= 1) and
    ``delta_{s+1} = (1 - sqrt eps_s)(1 - 1/r_s) delta_s`` with ``r_s = 10^(s+1)``.

    ``stages`` counts the states returned (s = 0 .. stages-1).  With
    ``strict=True`` an infeasible stage 0 raises and names the minimal
    feasible A; otherwise the schedule is returned with ``feasible=False``.
    """
    if (A is None) == (log_A is None):
        raise InvalidArgumentError("give exactly one of A or log_A")
    if log_A is None:
        if A <= 1:
            raise InvalidArgumentError("A must exceed 1")
        log_A = math.log(A)
    if stages < 1:
        raise InvalidArgumentError("stages must be >= 1")
    W = int(W)
    log_N, log_eps, log_delta = initial_scale(W, log_A, c)
    feasible = stage0_feasible(W, log_A, c)
    min_log_A = minimal_feasible_log_A(W, c) if not feasible else log_A
    if strict and not feasible:
        raise PreconditionError(
            f"stage 0 violates the scale condition for W={W}, log A={log_A:.6g}; "
            f"minimal feasible A on the doubling ladder is exp({min_log_A:.6g}) "
            f"(c = {c})")
    states = []
    for s in range(stages):
        r = 10 ** (s + 1)
        states.append(ScaleState(s, log_N, log_eps, log_delta, r))
        log_delta += math.log1p(-math.exp(0.5 * log_eps)) + math.log1p(-1.0 / r)
        log_N = 2.0 * log_N
        log_eps = -log_N
    out = Schedule(W, log_A, c, tuple(states), feasible, min_log_A)
    if strict:
        bad = [st.s for st, m in zip(states, out.delta_margin()) if not m > 0]
        if bad:
            raise PreconditionError(f"delta_s fell to delta_0/2 at stages {bad}")
    return out


# --------------------------------------------------------------- final bounds

def log_corollary_bound(W, C):
    if W < 2:
        raise InvalidArgumentError("the bound needs W >= 2")
    if C <= 1:
        raise InvalidArgumentError("C must exceed 1")
    return -W * math.log(W) ** 4 * math.log(C)


def corollary_bound(W, C):
    """``C^{-W (log W)^4}`` with the natural log."""
    return math.exp(log_corollary_bound(W, C))


def decay_event_probability(N, W, E, threshold, disorder, trials, seed, coupling=1.0,
                            threads=1):
    """Empirical ``P[||P_a G_{[a,b]} P_b|| < threshold]`` for ``[a, b] = [0, N-1]``.

    Near-singular realizations count as failures.
    """
    if trials < 100:
        raise InvalidArgumentError("decay_event_probability needs trials >= 100")
    model = StripModel(W, coupling, disorder)
    interval = Interval.of_size(N)

    def one(t):
        pot = sample_potential(model, interval, derive_seed(seed, t))
        try:
            res = Resolvent(assemble_hamiltonian(model, pot), E)
        except NearSingularError:
            return False
        return block_norm(res.block(interval.a, interval.b)) < threshold

    hits = parallel_map(one, range(trials), threads)
    return estimate(sum(hits), trials)
