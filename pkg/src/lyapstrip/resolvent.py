"""Restricted Green's functions G_I = (H_I - E)^{-1} by block recursion.

The recursive Green's function scheme is used throughout: left- and
right-connected blocks ``gL``/``gR`` give every block of the inverse as a
product of W x W factors, so far-off-diagonal blocks keep their relative
accuracy long after they drop below machine epsilon times ``||G||``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig_banded

from .errors import AggregationError, InvalidArgumentError, NearSingularError
from .lattice import assemble_hamiltonian, sample_potential
from .seeding import derive_seed, parallel_map

EPS = np.finfo(float).eps
# green_block refuses systems beyond this condition estimate
COND_LIMIT = 1.0 / (EPS * 1e3)
# Monte-Carlo aggregation drops realizations beyond this one
MC_COND_LIMIT = 1e12


def spectrum(op, E):
    """Eigenvalues of ``H_I - E`` (ascending)."""
    return eig_banded(op.to_banded(E), lower=True, eigvals_only=True)


def condition_estimate(op, E):
    ev = np.abs(spectrum(op, E))
    lo = ev.min()
    return np.inf if lo == 0 else ev.max() / lo


def block_norm(block):
    """Spectral norm of a (W x W) block."""
    return float(np.linalg.norm(np.asarray(block, dtype=float), 2))


def block_norms(blocks):
    """Spectral norms of a stack of blocks, shape (..., W, W) -> (...)."""
    blocks = np.asarray(blocks)
    if blocks.shape[-1] == 1:
        return np.abs(blocks[..., 0, 0])
    return np.linalg.norm(blocks, 2, axis=(-2, -1))


@dataclass(frozen=True)
class GreenBlock:
    a: int
    b: int
    block: np.ndarray


class Resolvent:
    """Block recursion for ``(H_I - E)^{-1}`` on one operator and energy.

    Construction is O(N W^3); individual blocks cost O(|a - b| W^3).
    """

    def __init__(self, op, E, check=True, cond_limit=COND_LIMIT):
        if not np.isfinite(E):
            raise InvalidArgumentError(f"energy must be finite, got {E}")
        self.op = op
        self.E = float(E)
        self.condition = condition_estimate(op, E) if check else None
        if check and not self.condition <= cond_limit:
            raise NearSingularError(
                f"H_I - E is near-singular on {op.interval} at E={E} "
                f"(condition estimate {self.condition:.3e})", self.condition)
        n, w = op.size, op.width
        A = op.blocks - self.E * np.eye(w)
        gL = np.empty_like(A)
        gR = np.empty_like(A)
        gL[0] = np.linalg.inv(A[0])
        for k in range(1, n):
            gL[k] = np.linalg.inv(A[k] - gL[k - 1])
        gR[n - 1] = np.linalg.inv(A[n - 1])
        for k in range(n - 2, -1, -1):
            gR[k] = np.linalg.inv(A[k] - gR[k + 1])
        diag = np.empty_like(A)
        for k in range(n):
            m = A[k].copy()
            if k > 0:
                m -= gL[k - 1]
            if k < n - 1:
                m -= gR[k + 1]
            diag[k] = np.linalg.inv(m)
        self.gL, self.gR, self.diag = gL, gR, diag

    def _offset(self, i):
        if i not in self.op.interval:
            raise InvalidArgumentError(f"column {i} outside {self.op.interval}")
        return i - self.op.interval.a

    def block(self, a, b):
        """The W x W block ``P_a G_I P_b``."""
        ka, kb = self._offset(a), self._offset(b)
        out = self.diag[kb]
        if ka < kb:
            for k in range(kb - 1, ka - 1, -1):
                out = -self.gL[k] @ out
        elif ka > kb:
            for k in range(kb + 1, ka + 1):
                out = -self.gR[k] @ out
        return out

    def restricted(self, columns):
        """``R G_I R`` for R the projection on the listed columns (all of Z_W)."""
        w = self.op.width
        cols = list(columns)
        out = np.empty((len(cols) * w, len(cols) * w))
        for p, a in enumerate(cols):
            for q, b in enumerate(cols):
                out[p * w:(p + 1) * w, q * w:(q + 1) * w] = self.block(a, b)
        return out

    def upper_by_distance(self):
        """Yield ``(d, X)`` with ``X[k] = P_{a+k} G P_{a+k+d}`` for d = 0 .. N-1."""
        X = self.diag
        yield 0, X
        for d in range(1, self.op.size):
            X = -np.matmul(self.gL[: self.op.size - d], X[1:])
            yield d, X

    def lower_by_distance(self):
        """Yield ``(d, Y)`` with ``Y[k] = P_{a+k+d} G P_{a+k}``."""
        Y = self.diag
        yield 0, Y
        n = self.op.size
        for d in range(1, n):
            Y = -np.matmul(self.gR[d:n], Y[: n - d])
            yield d, Y

    def log_norms_by_distance(self):
        """Yield ``(d, log ||P_{a+k} G P_{a+k+d}||)`` per start offset k.

        Blocks are renormalised at every step, so the logs stay finite where
        the blocks themselves would underflow.
        """
        X = self.diag
        s = block_norms(X)
        logs = np.log(s)
        X = X / s[:, None, None]
        yield 0, logs.copy()
        for d in range(1, self.op.size):
            X = -np.matmul(self.gL[: self.op.size - d], X[1:])
            logs = logs[1:]
            s = block_norms(X)
            logs = logs + np.log(s)
            X = X / s[:, None, None]
            yield d, logs.copy()

    def dense(self):
        """Full inverse assembled from blocks (small systems and tests only)."""
        n, w = self.op.size, self.op.width
        out = np.empty((n * w, n * w))
        for d, X in self.upper_by_distance():
            for k in range(n - d):
                out[k * w:(k + 1) * w, (k + d) * w:(k + d + 1) * w] = X[k]
        for d, Y in self.lower_by_distance():
            if d == 0:
                continue
            for k in range(n - d):
                out[(k + d) * w:(k + d + 1) * w, k * w:(k + 1) * w] = Y[k]
        return out


def green_block(op, E, a, b):
    """``P_a (H_I - E)^{-1} P_b`` as a :class:`GreenBlock`."""
    return GreenBlock(a, b, Resolvent(op, E).block(a, b))


def solve(op, E, rhs):
    """Solve ``(H_I - E) x = rhs`` for rhs of shape (N, W) or (N, W, k)."""
    from scipy.linalg import solve_banded

    w, dim = op.width, op.dim
    low = op.to_banded(E)
    ab = np.zeros((2 * w + 1, dim))
    ab[w:] = low
    for off in range(1, w + 1):
        ab[w - off, off:] = low[off, : dim - off]
    rhs = np.asarray(rhs)
    flat = rhs.reshape((dim,) + rhs.shape[2:])
    x = solve_banded((w, w), ab, flat)
    return x.reshape(rhs.shape)


@dataclass(frozen=True)
class DecayProfile:
    distances: np.ndarray
    mean_log_norm: np.ndarray
    counts: np.ndarray
    fitted_rate: float
    fit_intercept: float
    fit_min_distance: float
    trials: int
    excluded: int

    def rows(self):
        return list(zip(self.distances.tolist(), self.mean_log_norm.tolist(),
                        self.counts.tolist()))


def fit_decay(distances, mean_log_norm, min_distance):
    """Least-squares line through the points with ``d > min_distance``.

    Returns ``(rate, intercept)`` with rate the negated slope.
    """
    distances = np.asarray(distances, dtype=float)
    mask = distances > min_distance
    if mask.sum() < 3:
        raise InvalidArgumentError("decay fit needs at least 3 distances beyond the cut")
    slope, intercept = np.polyfit(distances[mask], np.asarray(mean_log_norm)[mask], 1)
    return float(-slope), float(intercept)


def _trial_log_norms(model, E, interval, seed):
    pot = sample_potential(model, interval, seed)
    op = assemble_hamiltonian(model, pot, interval)
    try:
        res = Resolvent(op, E, cond_limit=MC_COND_LIMIT)
    except NearSingularError:
        return None
    return [logs.sum() for _, logs in res.log_norms_by_distance()]


def decay_profile(model, E, interval, trials, seed, threads=1):
    """Disorder- and position-averaged ``log ||P_a G_I P_b||`` against ``|a - b|``.

    Realizations whose condition estimate exceeds ``MC_COND_LIMIT`` are
    skipped and counted in ``excluded``.  The fit uses ``d > |I| / 10``.
    """
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    if interval.size < 8:
        raise InvalidArgumentError("decay_profile needs an interval of size >= 8")
    n = interval.size
    sums = parallel_map(
        lambda t: _trial_log_norms(model, E, interval, derive_seed(seed, t)),
        range(trials), threads)
    kept = [s for s in sums if s is not None]
    if not kept:
        raise AggregationError(f"all {trials} realizations were near-singular")
    distances = np.arange(1, n)
    per_distance = np.array([n - d for d in distances], dtype=float)
    total = np.zeros(n - 1)
    for s in kept:  # fixed trial order
        total += np.asarray(s[1:])
    counts = per_distance * len(kept)
    mean = total / counts
    cut = n / 10.0
    rate, intercept = fit_decay(distances, mean, cut)
    return DecayProfile(distances, mean, counts.astype(int), rate, intercept, cut,
                        trials, trials - len(kept))
