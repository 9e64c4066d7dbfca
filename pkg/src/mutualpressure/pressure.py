"""Discrete pressure, Gibbs measures, and the classical variational duality.

All exponential sums go through max-shifted log-sum-exp; raw exponentials of
large quantities never appear.
"""

from dataclasses import dataclass, field

import numpy as np

from ._util import logsumexp
from .measures import Alphabet, JointPmf, shannon_entropy

__all__ = [
    "PotentialTensor",
    "pressure",
    "gibbs_measure",
    "marginal_potential",
    "variational_gap",
]


@dataclass(frozen=True)
class PotentialTensor:
    """Real-valued potential h on a finite product space, stored densely."""

    alphabets: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alphabets", tuple(self.alphabets))
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("potential entries must be finite")
        if v.shape != tuple(a.d for a in self.alphabets):
            raise ValueError("values shape does not match alphabet sizes")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.alphabets)

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    @classmethod
    def from_values(cls, values) -> "PotentialTensor":
        values = np.asarray(values, dtype=float)
        return cls(tuple(Alphabet.of_size(d) for d in values.shape), values)

    @classmethod
    def zeros(cls, d: int, n: int) -> "PotentialTensor":
        return cls.from_values(np.zeros((d,) * n))

    @classmethod
    def match_indicator(cls, d: int, n: int, beta: float = 1.0) -> "PotentialTensor":
        """beta times the indicator that all n coordinates agree."""
        v = np.zeros((d,) * n)
        idx = (np.arange(d),) * n
        v[idx] = beta
        return cls.from_values(v)


def pressure(h: PotentialTensor) -> float:
    """log of the partition sum Z_h = sum_x e^{h(x)}."""
    return float(logsumexp(h.values))


def gibbs_measure(h: PotentialTensor) -> JointPmf:
    """Probability proportional to e^h; entries strictly positive."""
    logp = h.values - pressure(h)
    return JointPmf(h.alphabets, np.exp(logp))


def marginal_potential(h: PotentialTensor, i: int) -> np.ndarray:
    """h_i(x) = log-sum-exp of h over all coordinates except axis i.

    Returned without subtracting log Z_h, so the Gibbs measure of h_i equals
    the i-th marginal of the Gibbs measure of h after normalization.
    """
    if not 0 <= i < h.n:
        raise IndexError(f"axis {i} out of range for n={h.n}")
    axes = tuple(j for j in range(h.n) if j != i)
    if not axes:
        return np.array(h.values, copy=True)
    return np.asarray(logsumexp(h.values, axis=axes))


def variational_gap(h: PotentialTensor, mu: JointPmf) -> float:
    """P(h) - mu(h) - S(mu); nonnegative, zero exactly at mu = Gibbs(h)."""
    if h.values.shape != mu.weights.shape:
        raise ValueError("potential and measure shapes do not match")
    return pressure(h) - float((mu.weights * h.values).sum()) - shannon_entropy(mu)
