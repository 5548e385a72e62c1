"""Per-trial seed derivation and an order-preserving worker pool.

Trial ``k`` of an experiment with master seed ``s`` draws from
``numpy.random.default_rng(derive_seed(s, k))`` where ``derive_seed`` is one
SplitMix64 output step applied to ``s + (k + 1) * 0x9E3779B97F4A7C15`` (mod
2**64).  Any other implementation can reproduce the streams from that rule.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master, index):
    """Seed for trial ``index`` of a run with seed ``master``."""
    state = (int(master) + int(index) * _GOLDEN) & _MASK
    return splitmix64(state)


def trial_rng(master, index):
    return np.random.default_rng(derive_seed(master, index))


def parallel_map(fn, items, threads=1):
    """``[fn(x) for x in items]``, optionally on a thread pool.

    Results always come back in input order, so the thread count never
    changes what callers reduce over.
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
