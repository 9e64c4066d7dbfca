"""Probability measures on finite alphabets and their entropic functionals.

All entropies are in nats. Relative entropy returns ``math.inf`` as an
explicit sentinel when absolute continuity fails; it never produces NaN.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._util import PROB_TOL

__all__ = [
    "Alphabet",
    "Pmf",
    "JointPmf",
    "shannon_entropy",
    "relative_entropy",
    "marginals",
    "product_measure",
    "mutual_information",
]


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite set of distinct symbol labels."""

    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))
        if len(self.symbols) == 0:
            raise ValueError("alphabet must have at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet labels must be distinct")

    @property
    def d(self) -> int:
        return len(self.symbols)

    def index(self, label: str) -> int:
        return self.symbols.index(label)

    @classmethod
    def of_size(cls, d: int) -> "Alphabet":
        return cls(tuple(f"t{l}" for l in range(1, d + 1)))


def _check_weights(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("probability weights must be nonnegative")
    if abs(w.sum() - 1.0) > PROB_TOL:
        raise ValueError(
            f"weights sum to {w.sum()!r}, outside tolerance {PROB_TOL}; "
            "inputs are rejected rather than silently renormalized"
        )
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class Pmf:
    """Probability vector on a single alphabet."""

    alphabet: Alphabet
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = _check_weights(self.weights)
        if w.shape != (self.alphabet.d,):
            raise ValueError("weights shape does not match alphabet size")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, weights) -> "Pmf":
        weights = np.asarray(weights, dtype=float)
        return cls(Alphabet.of_size(len(weights)), weights)

    @classmethod
    def uniform(cls, d: int) -> "Pmf":
        return cls(Alphabet.of_size(d), np.full(d, 1.0 / d))


@dataclass(frozen=True)
class JointPmf:
    """Probability tensor on the n-fold product of alphabets."""

    alphabets: tuple
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alphabets", tuple(self.alphabets))
        if len(self.alphabets) == 0:
            raise ValueError("need at least one alphabet")
        w = _check_weights(self.weights)
        if w.shape != tuple(a.d for a in self.alphabets):
            raise ValueError("weights shape does not match alphabet sizes")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.alphabets)

    @classmethod
    def from_weights(cls, weights) -> "JointPmf":
        weights = np.asarray(weights, dtype=float)
        return cls(tuple(Alphabet.of_size(d) for d in weights.shape), weights)


def shannon_entropy(mu) -> float:
    """-sum mu log mu in nats, with 0 log 0 := 0."""
    w = mu.weights
    pos = w > 0
    return float(-(w[pos] * np.log(w[pos])).sum())


def relative_entropy(mu, nu) -> float:
    """Kullback-Leibler divergence sum mu log(mu/nu) in nats.

    Returns math.inf when mu charges a point where nu vanishes.
    """
    if mu.weights.shape != nu.weights.shape:
        raise ValueError("shape mismatch between the two measures")
    p, q = mu.weights, nu.weights
    sup = p > 0
    if np.any(q[sup] == 0):
        return math.inf
    return float((p[sup] * np.log(p[sup] / q[sup])).sum())


def marginals(mu: JointPmf) -> list:
    """One-dimensional marginals of a joint measure, in coordinate order."""
    out = []
    for i, a in enumerate(mu.alphabets):
        axes = tuple(j for j in range(mu.n) if j != i)
        w = mu.weights.sum(axis=axes) if axes else mu.weights.copy()
        out.append(Pmf(a, w))
    return out


def product_measure(mus) -> JointPmf:
    """Tensor product of one-dimensional measures."""
    mus = list(mus)
    w = mus[0].weights
    for m in mus[1:]:
        w = np.multiply.outer(w, m.weights)
    return JointPmf(tuple(m.alphabet for m in mus), w)


def mutual_information(mu: JointPmf) -> float:
    """Relative entropy of mu with respect to the product of its marginals."""
    return relative_entropy(mu, product_measure(marginals(mu)))
