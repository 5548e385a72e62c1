"""Symplectic transfer matrices of the strip and QR-based Lyapunov spectra.

A solution of ``(H - E) xi = 0`` obeys ``xi_{i+1} = (E - D_i) xi_i - xi_{i-1}``,
so ``(xi_{i+1}, xi_i) = T_i (xi_i, xi_{i-1})`` with
``T_i = [[E - D_i, -I], [I, 0]]``.
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError, InconclusiveError, InvalidArgumentError
from .lattice import transverse_laplacian

N_BATCHES = 20
DEFAULT_REORTH = 10
# early re-orthogonalisation once frame entries reach this size; keeps the
# spread between the largest and smallest directions well inside double range
GROWTH_LIMIT = 1e4


def symplectic_form(W):
    eye = np.eye(W)
    zero = np.zeros((W, W))
    return np.block([[zero, -eye], [eye, zero]])


def transfer_matrix(model, column_potential, E):
    """2W x 2W transfer matrix for one column of the strip."""
    W = model.width
    v = np.asarray(column_potential, dtype=float)
    if v.shape != (W,):
        raise InvalidArgumentError(f"column potential must have length {W}")
    D = transverse_laplacian(W) + np.diag(model.coupling * v)
    eye = np.eye(W)
    return np.block([[E * eye - D, -eye], [eye, np.zeros((W, W))]])


def symplectic_defect(T):
    W = T.shape[0] // 2
    J = symplectic_form(W)
    return float(np.abs(T.T @ J @ T - J).max())


@njit(cache=True)
def _advance(Q, pot, E, lam, lap, period, limit):
    """Propagate the frame ``Q`` through the columns in ``pot``.

    Re-orthogonalises every ``period`` steps, as soon as an entry exceeds
    ``limit``, and after the last column; returns the summed ``log |R_kk|``.
    A non-finite frame aborts with NaNs.
    """
    W = lap.shape[0]
    n = pot.shape[0]
    logs = np.zeros(2 * W)
    top = Q[:W].copy()
    bot = Q[W:].copy()
    since = 0
    for i in range(n):
        new = lap @ top
        for a in range(W):
            shift = E - lam * pot[i, a]
            for b in range(2 * W):
                new[a, b] = shift * top[a, b] - new[a, b] - bot[a, b]
        bot = top
        top = new
        since += 1
        if since == period or i == n - 1 or np.abs(top).max() > limit:
            M = np.empty((2 * W, 2 * W))
            M[:W] = top
            M[W:] = bot
            if not np.all(np.isfinite(M)):
                logs[:] = np.nan
                return M, logs
            q, r = np.linalg.qr(M)
            for k in range(2 * W):
                d = r[k, k]
                logs[k] += np.log(abs(d))
                if d < 0:
                    q[:, k] = -q[:, k]
            top = q[:W].copy()
            bot = q[W:].copy()
            since = 0
    M = np.empty((2 * W, 2 * W))
    M[:W] = top
    M[W:] = bot
    return M, logs


def advance_reference(Q, pot, E, lam, lap, period, limit=GROWTH_LIMIT):
    """Plain numpy version of the propagation kernel (used as a cross-check)."""
    W = lap.shape[0]
    logs = np.zeros(2 * W)
    n = pot.shape[0]
    since = 0
    for i in range(n):
        T = np.block([[E * np.eye(W) - lap - np.diag(lam * pot[i]), -np.eye(W)],
                      [np.eye(W), np.zeros((W, W))]])
        Q = T @ Q
        since += 1
        if since == period or i == n - 1 or np.abs(Q[:W]).max() > limit:
            q, r = np.linalg.qr(Q)
            d = np.diag(r)
            logs += np.log(np.abs(d))
            Q = q * np.where(d < 0, -1.0, 1.0)
            since = 0
    return Q, logs


@dataclass(frozen=True, eq=False)
class LyapunovResult:
    exponents: np.ndarray
    stderr: np.ndarray
    steps: int
    reorth_period: int
    batch_estimates: np.ndarray

    @property
    def width(self):
        return self.exponents.size // 2

    def pairing_defect(self):
        """``|gamma_k + gamma_{2W+1-k}|`` and the matching combined stderr."""
        g, s = self.exponents, self.stderr
        return np.abs(g + g[::-1]), np.hypot(s, s[::-1])

    def sum_defect(self):
        return abs(float(self.exponents.sum())), float(self.stderr.sum())


def lyapunov_spectrum(model, E, steps, reorth_period=DEFAULT_REORTH, seed=0,
                      batches=N_BATCHES):
    """Full 2W-exponent spectrum from one disorder realization of length ``steps``.

    The product is cut into ``batches`` consecutive blocks; the exponents are
    the total log-growth over ``steps`` and the error bars are batch means.
    Column potentials are drawn batch by batch from ``default_rng(seed)``.
    ``reorth_period`` is the longest stretch between QR steps; fast-growing
    products are re-orthogonalised sooner.
    """
    if steps < 1000:
        raise InvalidArgumentError("lyapunov_spectrum needs steps >= 1000")
    if not 1 <= reorth_period <= 50:
        raise InvalidArgumentError("reorth_period must lie in [1, 50]")
    if batches < 2:
        raise InvalidArgumentError("need at least 2 batches")
    W = model.width
    lap = transverse_laplacian(W)
    rng = np.random.default_rng(seed)
    Q = np.eye(2 * W)
    sizes = np.full(batches, steps // batches)
    sizes[: steps % batches] += 1
    per_batch = np.empty((batches, 2 * W))
    for k, m in enumerate(sizes):
        pot = model.disorder.sample(rng, (int(m), W))
        Q, logs = _advance(Q, pot, float(E), float(model.coupling), lap, int(reorth_period),
                           GROWTH_LIMIT)
        if not np.all(np.isfinite(logs)):
            raise ConfigurationError(
                f"transfer product overflowed within {reorth_period} steps; "
                "use a smaller reorth_period")
        per_batch[k] = logs
    total = per_batch.sum(axis=0) / steps
    est = per_batch / sizes[:, None]
    err = est.std(axis=0, ddof=1) / np.sqrt(batches)
    order = np.argsort(-total, kind="stable")
    return LyapunovResult(total[order], err[order], int(steps), int(reorth_period), est[:, order])


def smallest_positive_exponent(r):
    """``(gamma_W, stderr)``; raises if the 3-sigma band reaches zero."""
    W = r.width
    g, s = float(r.exponents[W - 1]), float(r.stderr[W - 1])
    if not g - 3.0 * s > 0:
        raise InconclusiveError(f"gamma_{W} = {g:.4g} +- {s:.2g} is not resolved from 0")
    return g, s


def free_channel_exponents(E, W):
    """Exact exponents of the lambda = 0 strip: ``arcosh(|E'| / 2)`` per channel,
    zero for channels inside the band (sorted descending, positive half)."""
    Ep = E - 2.0 * np.cos(2.0 * np.pi * np.arange(W) / W)
    g = np.arccosh(np.maximum(np.abs(Ep) / 2.0, 1.0))
    return np.sort(g)[::-1]


@dataclass(frozen=True)
class TrendFit:
    """``log gamma = intercept - slope * x``, with x = W (log W)^4 or log W."""

    form: str
    slope: float
    intercept: float
    rss: float


def fit_width_trend(widths, gammas):
    """Fit ``gamma_W`` against ``C^{-W (log W)^4}`` and against ``W^{-p}``.

    For the first form ``slope = log C``; for the power law ``slope = p``.
    """
    widths = np.asarray(widths, dtype=float)
    y = np.log(np.asarray(gammas, dtype=float))
    fits = []
    for form, x in (("exp_wlog4", widths * np.log(widths) ** 4), ("power", np.log(widths))):
        coef, res, *_ = np.polyfit(x, y, 1, full=True)
        rss = float(res[0]) if len(res) else 0.0
        fits.append(TrendFit(form, float(-coef[0]), float(coef[1]), rss))
    return fits
