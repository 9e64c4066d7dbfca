"""Shared numeric helpers: stable log-sums, exact log-factorials, seeded substreams."""

import zlib
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

__all__ = ["logsumexp", "log_factorials", "tv_distance", "substream"]

PROB_TOL = 1e-12


@lru_cache(maxsize=64)
def log_factorials(n: int) -> np.ndarray:
    """Table of log k! for k = 0..n, built by cumulative summation of logs.

    Exact up to float accumulation; no Stirling approximation anywhere.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = np.zeros(n + 1)
    if n >= 1:
        out[1:] = np.cumsum(np.log(np.arange(1, n + 1, dtype=float)))
    out.setflags(write=False)
    return out


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance between two probability vectors/tensors."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent RNG stream derived from (seed, label).

    One root seed per run; each estimator pulls its own labelled stream so
    that running several estimators in one process does not couple them.
    """
    tag = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))
