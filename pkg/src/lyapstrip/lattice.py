"""Strip lattice Z x Z_W, disorder laws, potentials and restricted Hamiltonians.

Sites are labelled ``(i, j)`` with ``i`` an absolute longitudinal index and
``j`` in ``Z_W``.  Dense matrices use the flat index ``(i - a) * W + j`` for an
interval ``[a, b]``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

_KINDS = ("uniform", "triangular", "bernoulli")


@dataclass(frozen=True)
class DisorderSpec:
    """Single-site distribution of the potential.

    ``uniform(lo, hi)`` and ``triangular(lo, hi)`` (symmetric, mode at the
    midpoint) have bounded densities.  ``bernoulli(p, a, b)`` takes the value
    ``b`` with probability ``p`` and ``a`` otherwise; it is kept for sampling
    only and reports an infinite density bound.
    """

    kind: str
    lo: float
    hi: float
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidArgumentError(f"unknown disorder kind {self.kind!r}")
        if not self.lo < self.hi:
            raise InvalidArgumentError(f"disorder needs lo < hi, got {self.lo}, {self.hi}")
        if self.kind == "bernoulli" and not 0.0 <= self.p <= 1.0:
            raise InvalidArgumentError(f"bernoulli p must lie in [0, 1], got {self.p}")

    @classmethod
    def uniform(cls, lo=-0.5, hi=0.5):
        return cls("uniform", float(lo), float(hi))

    @classmethod
    def triangular(cls, lo, hi):
        return cls("triangular", float(lo), float(hi))

    @classmethod
    def bernoulli(cls, p, a, b):
        return cls("bernoulli", float(a), float(b), float(p))

    @classmethod
    def parse(cls, text):
        """Parse the ``kind:params`` grammar, e.g. ``uniform:-0.5,0.5``."""
        kind, _, rest = text.partition(":")
        kind = kind.strip().lower()
        try:
            params = [float(x) for x in rest.split(",")] if rest.strip() else []
        except ValueError:
            raise InvalidArgumentError(f"unparsable disorder parameters in {text!r}") from None
        arity = {"uniform": 2, "triangular": 2, "bernoulli": 3}
        if kind not in arity:
            raise InvalidArgumentError(f"unknown disorder kind {kind!r}")
        if len(params) != arity[kind]:
            raise InvalidArgumentError(
                f"{kind} takes {arity[kind]} parameters, got {len(params)} in {text!r}")
        return getattr(cls, kind)(*params)

    def __str__(self):
        if self.kind == "bernoulli":
            return f"bernoulli:{self.p!r},{self.lo!r},{self.hi!r}"
        return f"{self.kind}:{self.lo!r},{self.hi!r}"

    @property
    def has_bounded_density(self):
        return self.kind != "bernoulli"

    @property
    def density_bound(self):
        """Supremum of the density (``inf`` for bernoulli)."""
        width = self.hi - self.lo
        if self.kind == "uniform":
            return 1.0 / width
        if self.kind == "triangular":
            return 2.0 / width
        return float("inf")

    @property
    def mean(self):
        if self.kind == "bernoulli":
            return (1 - self.p) * self.lo + self.p * self.hi
        return 0.5 * (self.lo + self.hi)

    @property
    def std(self):
        width = self.hi - self.lo
        if self.kind == "uniform":
            return width / np.sqrt(12.0)
        if self.kind == "triangular":
            return width / np.sqrt(24.0)
        return width * np.sqrt(self.p * (1 - self.p))

    def sample(self, rng, size):
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size)
        if self.kind == "triangular":
            return rng.triangular(self.lo, 0.5 * (self.lo + self.hi), self.hi, size)
        return np.where(rng.random(size) < self.p, self.hi, self.lo)


@dataclass(frozen=True)
class Interval:
    """Integer interval ``[a, b]`` (both ends included)."""

    a: int
    b: int

    def __post_init__(self):
        if self.a > self.b:
            raise InvalidArgumentError(f"interval needs a <= b, got [{self.a}, {self.b}]")

    @classmethod
    def of_size(cls, n, start=0):
        return cls(start, start + n - 1)

    @property
    def size(self):
        return self.b - self.a + 1

    def __len__(self):
        return self.size

    def __contains__(self, i):
        return self.a <= i <= self.b

    def contains(self, other):
        return self.a <= other.a and other.b <= self.b

    def indices(self):
        return np.arange(self.a, self.b + 1)


@dataclass(frozen=True)
class StripModel:
    """H = coupling * V + Laplacian on Z x Z_W with IID site potential."""

    width: int
    coupling: float = 1.0
    disorder: DisorderSpec = field(default_factory=DisorderSpec.uniform)

    def __post_init__(self):
        if int(self.width) != self.width or self.width < 1:
            raise InvalidArgumentError(f"width must be an integer >= 1, got {self.width}")


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Potential values ``V[i, j]`` on ``interval x Z_W`` (row ``i - interval.a``)."""

    interval: Interval
    values: np.ndarray
    seed: int = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != self.interval.size:
            raise InvalidArgumentError(
                f"potential of shape {values.shape} does not cover {self.interval}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def width(self):
        return self.values.shape[1]

    def column(self, i):
        if i not in self.interval:
            raise InvalidArgumentError(f"column {i} outside {self.interval}")
        return self.values[i - self.interval.a]

    def restrict(self, interval):
        if not self.interval.contains(interval):
            raise InvalidArgumentError(f"{interval} not covered by {self.interval}")
        lo = interval.a - self.interval.a
        return PotentialField(interval, self.values[lo:lo + interval.size], self.seed)


@dataclass(frozen=True, eq=False)
class BlockTridiagonalOperator:
    """Restriction H_I: diagonal blocks ``blocks[k]`` (W x W) for column
    ``interval.a + k``, identity couplings between neighbouring columns and
    Dirichlet ends."""

    blocks: np.ndarray
    interval: Interval

    def __post_init__(self):
        blocks = np.array(self.blocks, dtype=float)
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
            raise InvalidArgumentError(f"blocks must have shape (N, W, W), got {blocks.shape}")
        if blocks.shape[0] != self.interval.size:
            raise InvalidArgumentError("block count does not match interval size")
        if not np.array_equal(blocks, blocks.transpose(0, 2, 1)):
            raise InvalidArgumentError("diagonal blocks must be symmetric")
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def width(self):
        return self.blocks.shape[1]

    @property
    def size(self):
        return self.interval.size

    @property
    def dim(self):
        return self.size * self.width

    def block(self, i):
        return self.blocks[i - self.interval.a]

    def restrict(self, interval):
        """Operator restricted to a sub-interval (Dirichlet at the new ends)."""
        if not self.interval.contains(interval):
            raise InvalidArgumentError(f"{interval} not inside {self.interval}")
        lo = interval.a - self.interval.a
        return BlockTridiagonalOperator(self.blocks[lo:lo + interval.size], interval)

    def to_dense(self):
        n, w = self.size, self.width
        out = np.zeros((n * w, n * w))
        eye = np.eye(w)
        for k in range(n):
            s = slice(k * w, (k + 1) * w)
            out[s, s] = self.blocks[k]
            if k + 1 < n:
                t = slice((k + 1) * w, (k + 2) * w)
                out[s, t] = eye
                out[t, s] = eye
        return out

    def to_banded(self, E=0.0):
        """Lower banded storage of ``H_I - E`` (bandwidth W) for LAPACK routines."""
        n, w = self.size, self.width
        dim = n * w
        ab = np.zeros((w + 1, dim))
        for k in range(n):
            d = self.blocks[k]
            for off in range(w):
                rows = np.arange(off, w)
                ab[off, k * w + rows - off] = d[rows, rows - off]
        ab[0] -= E
        ab[w, : dim - w] = 1.0
        return ab


def transverse_laplacian(W):
    """Hopping matrix of the periodic ring Z_W.

    Entry ``(j, j')`` counts the steps ``j +- 1 = j' (mod W)``, so W = 1 gives
    ``[[2]]`` and W = 2 gives ``[[0, 2], [2, 0]]``.
    """
    if int(W) != W or W < 1:
        raise InvalidArgumentError(f"width must be an integer >= 1, got {W}")
    W = int(W)
    out = np.zeros((W, W))
    for j in range(W):
        out[j, (j + 1) % W] += 1.0
        out[j, (j - 1) % W] += 1.0
    return out


def sample_potential(model, interval, seed):
    """IID potential on ``interval x Z_W``; deterministic in ``(model, interval, seed)``."""
    rng = np.random.default_rng(seed)
    values = model.disorder.sample(rng, (interval.size, model.width))
    return PotentialField(interval, values, seed)


def assemble_hamiltonian(model, potential, interval=None):
    """Block-tridiagonal H_I with ``D_i = coupling * diag(V_i) + ring Laplacian``."""
    if interval is None:
        interval = potential.interval
    if potential.width != model.width:
        raise InvalidArgumentError(
            f"potential width {potential.width} != model width {model.width}")
    if not potential.interval.contains(interval):
        raise InvalidArgumentError(f"potential on {potential.interval} does not cover {interval}")
    values = potential.restrict(interval).values
    lap = transverse_laplacian(model.width)
    blocks = np.broadcast_to(lap, (interval.size,) + lap.shape).copy()
    idx = np.arange(model.width)
    blocks[:, idx, idx] += model.coupling * values
    return BlockTridiagonalOperator(blocks, interval)
