"""Schur-complement reduction of restricted inverses and Wegner-type probes."""
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InvalidArgumentError, NearSingularError, PreconditionError, UnsupportedDisorderError
from .seeding import derive_seed, parallel_map

_COND_LIMIT = 1.0 / (np.finfo(float).eps * 1e3)


@dataclass(frozen=True, eq=False)
class PartitionedOperator:
    """Symmetric ``T`` on {0..n-1} split into ``omega1`` and its complement."""

    T: np.ndarray
    omega1: tuple

    def __post_init__(self):
        T = np.array(self.T, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise InvalidArgumentError("T must be square")
        if not np.allclose(T, T.T, rtol=0, atol=1e-12 * max(1.0, np.abs(T).max())):
            raise InvalidArgumentError("T must be symmetric")
        om1 = tuple(sorted(int(i) for i in self.omega1))
        if len(set(om1)) != len(om1) or any(i < 0 or i >= T.shape[0] for i in om1):
            raise InvalidArgumentError("omega1 must be distinct indices of T")
        if not om1:
            raise InvalidArgumentError("omega1 must be non-empty")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "omega1", om1)

    @property
    def omega2(self):
        s = set(self.omega1)
        return tuple(i for i in range(self.T.shape[0]) if i not in s)

    def blocks(self):
        o1, o2 = np.array(self.omega1), np.array(self.omega2, dtype=int)
        T = self.T
        return T[np.ix_(o1, o1)], T[np.ix_(o1, o2)], T[np.ix_(o2, o2)]


def gaussian_symmetric(n, seed, scale=1.0):
    """``scale * (G + G^T) / sqrt(2)`` with G standard normal.

    Off-diagonal entries have variance ``scale**2``, diagonal ones ``2 scale**2``.
    """
    g = np.random.default_rng(seed).standard_normal((n, n))
    return scale * (g + g.T) / np.sqrt(2.0)


def schur_operator(p):
    """``A = T1 - T12 T2^{-1} T21`` on omega1."""
    T1, T12, T2 = p.blocks()
    if T2.size == 0:
        return T1.copy()
    if np.linalg.cond(T2) > _COND_LIMIT:
        raise PreconditionError("the complement block T2 is not invertible")
    A = T1 - T12 @ np.linalg.solve(T2, T12.T)
    return 0.5 * (A + A.T)


def schur_reduce(p, dv):
    """``R1 (D_V + T)^{-1} R1`` computed as ``(D_V + A)^{-1}`` on omega1."""
    dv = np.asarray(dv, dtype=float)
    if dv.shape != (len(p.omega1),):
        raise InvalidArgumentError(f"dv must have length {len(p.omega1)}")
    M = schur_operator(p) + np.diag(dv)
    cond = np.linalg.cond(M)
    if not cond <= _COND_LIMIT:
        raise NearSingularError("D_V + A is near-singular", cond)
    return np.linalg.inv(M)


def restricted_inverse(p, dv):
    """Direct route: invert ``D_V + T`` on the whole index set, then restrict."""
    full = p.T.copy()
    o1 = np.array(p.omega1)
    full[o1, o1] += np.asarray(dv, dtype=float)
    return np.linalg.inv(full)[np.ix_(o1, o1)]


def clopper_pearson(k, n, level=0.95):
    k = np.asarray(k)
    alpha = 1 - level
    lo = np.where(k > 0, stats.beta.ppf(alpha / 2, k, n - k + 1), 0.0)
    hi = np.where(k < n, stats.beta.ppf(1 - alpha / 2, k + 1, n - k), 1.0)
    return lo, hi


@dataclass(frozen=True, eq=False)
class TailEstimate:
    """Empirical tail probabilities on a threshold grid (sorted ascending).

    ``raw_prob`` are the plain frequencies; ``tail_prob`` is the monotone
    regularisation (running min for upper tails, running max for lower ones).
    ``slope`` is the fitted scaling exponent: log-log for upper tails, linear
    in the threshold for lower tails.
    """

    grid: np.ndarray
    counts: np.ndarray
    trials: int
    raw_prob: np.ndarray
    tail_prob: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    slope: float
    fit_mask: np.ndarray = field(repr=False)
    regularized: bool = False

    @property
    def lambda_grid(self):
        return self.grid


def _check_disorder(disorder):
    if not disorder.has_bounded_density:
        raise UnsupportedDisorderError(
            f"{disorder.kind} disorder has no bounded density")


def _sample_dv(disorder, k, seed, trials, threads):
    rows = parallel_map(
        lambda t: disorder.sample(np.random.default_rng(derive_seed(seed, t)), k),
        range(trials), threads)
    return np.array(rows)


def _min_abs_eig(A, dv):
    stack = A[None, :, :] + np.einsum("ti,ij->tij", dv, np.eye(A.shape[0]))
    return np.abs(np.linalg.eigvalsh(stack)).min(axis=1)


def _estimate(grid, counts, trials, upper):
    raw = counts / trials
    if upper:
        reg = np.minimum.accumulate(raw)
    else:
        reg = np.maximum.accumulate(raw)
    lo, hi = clopper_pearson(counts, trials)
    return raw, reg, lo, hi, bool(np.any(reg != raw))


def wegner_probe(p, disorder, lambda_grid, trials, seed, threads=1):
    """Empirical ``P[||R1 (D_V + T)^{-1} R1|| > lambda]`` with V IID on omega1.

    T stays fixed; only the diagonal on omega1 is random.  The norm equals
    ``1 / dist(spec(D_V + A), 0)``.
    """
    _check_disorder(disorder)
    if trials < 100:
        raise InvalidArgumentError("wegner_probe needs trials >= 100")
    grid = np.sort(np.asarray(lambda_grid, dtype=float))
    A = schur_operator(p)
    dv = _sample_dv(disorder, len(p.omega1), seed, trials, threads)
    dist = _min_abs_eig(A, dv)
    with np.errstate(divide="ignore"):
        norms = 1.0 / dist
    counts = (norms[None, :] > grid[:, None]).sum(axis=1)
    raw, reg, lo, hi, flag = _estimate(grid, counts, trials, upper=True)
    mask = raw > 10.0 / trials
    slope = np.nan
    if mask.sum() >= 2:
        slope = float(np.polyfit(np.log(grid[mask]), np.log(raw[mask]), 1)[0])
    return TailEstimate(grid, counts, trials, raw, reg, lo, hi, slope, mask, flag)


def eigen_distance_probe(p, disorder, kappa_grid, trials, seed, threads=1):
    """Empirical ``P[dist(spec(D_V + A), 0) < kappa]``.

    ``slope`` is the least-squares slope of probability against kappa through
    the origin; the Wegner bound caps it at ``2 |omega1| * density_bound``.
    """
    _check_disorder(disorder)
    if trials < 100:
        raise InvalidArgumentError("eigen_distance_probe needs trials >= 100")
    grid = np.sort(np.asarray(kappa_grid, dtype=float))
    A = schur_operator(p)
    dv = _sample_dv(disorder, len(p.omega1), seed, trials, threads)
    dist = _min_abs_eig(A, dv)
    counts = (dist[None, :] < grid[:, None]).sum(axis=1)
    raw, reg, lo, hi, flag = _estimate(grid, counts, trials, upper=False)
    mask = grid > 0
    slope = float(grid[mask] @ raw[mask] / (grid[mask] @ grid[mask])) if mask.any() else np.nan
    return TailEstimate(grid, counts, trials, raw, reg, lo, hi, slope, mask, flag)
