"""Exact method-of-types probabilities of typical sets and their decay rates.

Probabilities are computed by summing over integer types inside the window
with exact log-factorials, never by sampling: the quantities decay
exponentially and Monte Carlo cannot resolve them.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._util import log_factorials, logsumexp
from .measures import Pmf, relative_entropy

__all__ = [
    "TypicalSetSpec",
    "typical_set_log_prob",
    "ldp_rate",
    "lemma31_check",
]

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class TypicalSetSpec:
    """Reference measure, window center, window half-width, and sequence length."""

    mu0: Pmf
    mu1: Pmf
    delta: float
    N: int

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.mu0.alphabet.d != self.mu1.alphabet.d:
            raise ValueError("reference and target must share an alphabet")


def typical_set_log_prob(spec: TypicalSetSpec) -> float:
    """(1/N) log of the mu0^N-probability that the empirical type lies in the
    open window |type - mu1| < delta coordinatewise.

    Returns -inf when the window contains no integer type. Sequences charging
    symbols where mu0 vanishes contribute zero probability and are skipped.
    """
    mu0, mu1, delta, N = spec.mu0.weights, spec.mu1.weights, spec.delta, spec.N
    d = mu0.size
    lf = log_factorials(N)
    logmu0 = np.where(mu0 > 0, np.log(np.maximum(mu0, 1e-300)), -np.inf)

    # per-symbol count ranges from the open window, trimmed to mu0's support
    los, his = [], []
    for t in range(d):
        lo = max(0, math.floor(N * (mu1[t] - delta)) + 1)
        hi = min(N, math.ceil(N * (mu1[t] + delta)) - 1)
        if mu0[t] == 0:
            hi = min(hi, 0)
        los.append(lo)
        his.append(hi)
        if lo > hi:
            return -math.inf

    terms = []

    def rec(t, left, acc):
        if t == d - 1:
            k = left
            if los[t] <= k <= his[t] and (mu0[t] > 0 or k == 0):
                kl = 0.0 if k == 0 else k * logmu0[t]
                terms.append(acc - lf[k] + kl)
            return
        lo = max(los[t], left - sum(his[t + 1:]))
        hi = min(his[t], left - sum(los[t + 1:]))
        for k in range(lo, hi + 1):
            kl = 0.0 if k == 0 else k * logmu0[t]
            rec(t + 1, left - k, acc - lf[k] + kl)

    rec(0, N, lf[N])
    if not terms:
        return -math.inf
    return float(logsumexp(np.asarray(terms)) / N)


def _project_box_simplex(y, lo, hi):
    """Euclidean projection onto {p : sum p = 1, lo <= p <= hi} by bisection
    on the clip shift."""
    a = float(np.min(y - hi)) - 1.0  # clip -> hi everywhere, sum >= 1
    b = float(np.max(y - lo)) + 1.0  # clip -> lo everywhere, sum <= 1
    for _ in range(200):
        m = 0.5 * (a + b)
        s = np.clip(y - m, lo, hi).sum()
        if s > 1.0:
            a = m
        else:
            b = m
    return np.clip(y - 0.5 * (a + b), lo, hi)


def ldp_rate(mu0: Pmf, mu1: Pmf, delta: float) -> float:
    """Negative of the minimal KL(p || mu0) over the closed window
    |p - mu1|_inf <= delta intersected with the simplex.

    Zero exactly when mu0 itself lies in the closed window.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    w0, w1 = mu0.weights, mu1.weights
    d = w0.size
    lo = np.maximum(w1 - delta, 0.0)
    hi = np.minimum(w1 + delta, 1.0)
    if lo.sum() > 1.0 + 1e-12 or hi.sum() < 1.0 - 1e-12:
        raise ValueError("the window does not intersect the simplex")
    if np.all((w0 >= lo - 1e-15) & (w0 <= hi + 1e-15)):
        return 0.0

    def kl(p):
        return relative_entropy(Pmf(mu0.alphabet, p), mu0)

    if d == 2:
        # one-dimensional: golden-section over the first coordinate
        a = max(lo[0], 1.0 - hi[1])
        b = min(hi[0], 1.0 - lo[1])

        def f(p1):
            return kl(np.array([p1, 1.0 - p1]))

        x1, x2 = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
        f1, f2 = f(x1), f(x2)
        while b - a > 1e-14:
            if f1 <= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - _GOLDEN * (b - a)
                f1 = f(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + _GOLDEN * (b - a)
                f2 = f(x2)
        return -min(f1, f2)

    # projected gradient with backtracking to 1e-10 stationarity
    p = _project_box_simplex(w1.copy(), lo, hi)
    p = np.where(p <= 0, 1e-12, p)
    p = p / p.sum()
    step = 1.0
    val = kl(p)
    for _ in range(100000):
        grad = np.log(np.maximum(p, 1e-300)) - np.log(np.maximum(w0, 1e-300)) + 1.0
        cand = _project_box_simplex(p - step * grad, lo, hi)
        move = float(np.abs(cand - p).max())
        vc = kl(cand)
        if vc < val - 1e-16:
            p, val = cand, vc
            step = min(step * 1.5, 1e3)
        else:
            step *= 0.5
            if step < 1e-14 or move < 1e-12:
                break
        if move < 1e-10 and step >= 1.0:
            break
    return -val


def lemma31_check(mu0: Pmf, mu1: Pmf, delta: float, N_list) -> dict:
    """Tabulate typical-set log-probabilities across N and compare against the
    large-deviation prediction.

    Same window center as reference: values tend to 0 like d log N / N.
    Window excluding the reference: values approach the (negative) rate.
    """
    N_list = list(N_list)
    if not N_list:
        raise ValueError("need at least one N")
    d = mu0.alphabet.d
    values = [
        typical_set_log_prob(TypicalSetSpec(mu0, mu1, delta, N)) for N in N_list
    ]
    rate = ldp_rate(mu0, mu1, delta)
    same_center = bool(np.all(np.abs(mu0.weights - mu1.weights) < delta))
    out = {
        "N": N_list,
        "log_prob_rate": values,
        "ldp_rate": rate,
        "same_center": same_center,
    }
    Nmax = max(N_list)
    vmax = values[N_list.index(Nmax)]
    if same_center:
        out["bound"] = 2 * d * math.log(Nmax) / Nmax
        out["converged"] = abs(vmax) < out["bound"] + 0.005
    else:
        out["bound"] = 0.02
        out["converged"] = abs(vmax - rate) < out["bound"]
    return out
