"""Permutation micro-states and the finite-N mutual pressure.

Three routes to the same quantity live here:

* ``brute_force_value`` averages exp(N*kappa) over every permutation tuple
  (the oracle; factorial cost, hard-capped),
* ``finite_n_value`` reorganizes the same sum over joint types, i.e. over
  integer contingency tensors with the sample types as margins, weighting
  each by an exact coset count,
* ``mc_value`` replaces the exhaustive permutation average with uniform
  sampling and reports a bootstrap standard error.

Sorted micro-states are canonicalized to their type counts; the length-N
sequence is only materialized where permutations are actually applied.
"""

import itertools
import math
from functools import lru_cache
from dataclasses import InitVar, dataclass, field

import numpy as np

from ._util import log_factorials, logsumexp, substream
from .measures import Alphabet, Pmf
from .pressure import PotentialTensor

__all__ = [
    "TypeCounts",
    "SortedSample",
    "ContingencyTensor",
    "MutualPressureEstimate",
    "EnumerationBudgetExceeded",
    "approximating_sample",
    "kappa",
    "brute_force_value",
    "enumerate_contingency",
    "coset_log_count",
    "finite_n_value",
    "mc_value",
]

BRUTE_FORCE_MAX_N = 7
BRUTE_FORCE_MAX_COORDS = 3
DEFAULT_ENUM_BUDGET = 10**8


class EnumerationBudgetExceeded(RuntimeError):
    """Raised when contingency enumeration visits more tensors than allowed."""


@dataclass(frozen=True)
class TypeCounts:
    """Per-symbol occurrence counts of a length-N sequence."""

    alphabet: Alphabet
    counts: tuple

    def __post_init__(self):
        c = tuple(int(k) for k in self.counts)
        if len(c) != self.alphabet.d:
            raise ValueError("counts length must match alphabet size")
        if any(k < 0 for k in c):
            raise ValueError("counts must be nonnegative")
        if sum(c) < 1:
            raise ValueError("total count must be positive")
        object.__setattr__(self, "counts", c)

    @property
    def N(self) -> int:
        return sum(self.counts)

    def type_pmf(self) -> Pmf:
        return Pmf(self.alphabet, np.asarray(self.counts, float) / self.N)


@dataclass(frozen=True)
class SortedSample:
    """Canonical sorted micro-state, represented by its type counts."""

    type_counts: TypeCounts

    @property
    def N(self) -> int:
        return self.type_counts.N

    @property
    def alphabet(self) -> Alphabet:
        return self.type_counts.alphabet

    def to_indices(self) -> np.ndarray:
        """The sorted sequence as symbol indices, length N."""
        return np.repeat(
            np.arange(self.alphabet.d), np.asarray(self.type_counts.counts)
        )


@dataclass(frozen=True)
class ContingencyTensor:
    """Nonnegative integer tensor with prescribed one-dimensional margins."""

    alphabets: tuple
    entries: np.ndarray = field(repr=False)
    margins: tuple
    check: InitVar[bool] = True

    def __post_init__(self, check):
        e = np.asarray(self.entries, dtype=np.int64)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "alphabets", tuple(self.alphabets))
        object.__setattr__(self, "margins", tuple(self.margins))
        if not check:
            return
        for i, m in enumerate(self.margins):
            axes = tuple(j for j in range(e.ndim) if j != i)
            got = e.sum(axis=axes) if axes else e
            if not np.array_equal(got, np.asarray(m.counts)):
                raise ValueError(f"axis {i} sums do not match the stated margin")

    @property
    def N(self) -> int:
        return int(self.entries.sum())


@dataclass(frozen=True)
class MutualPressureEstimate:
    """A mutual-pressure value with its method tag and diagnostics."""

    value: float
    method: str  # "finite-N exact" | "monte-carlo" | "limit-dual"
    N: int | None = None
    iterations: int | None = None
    residual: float | None = None
    stderr: float | None = None
    samples: int | None = None
    trace: tuple | None = None


def approximating_sample(mu: Pmf, N: int) -> SortedSample:
    """Sorted micro-state of length N whose type is within 1/N of mu.

    Largest-remainder rounding of N*mu; remainder seats go to the largest
    fractional parts, ties broken toward the lowest symbol index, so the
    result is deterministic.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    target = N * mu.weights
    counts = np.floor(target).astype(int)
    fracs = target - counts
    seats = N - counts.sum()
    if seats:
        # stable sort on -frac keeps lowest index first among ties
        order = np.argsort(-fracs, kind="stable")
        counts[order[:seats]] += 1
    return SortedSample(TypeCounts(mu.alphabet, tuple(int(k) for k in counts)))


def kappa(h: PotentialTensor, sequences) -> float:
    """Empirical average (1/N) sum_j h(x_1j, ..., x_nj) of h along n sequences."""
    seqs = [np.asarray(s, dtype=int) for s in sequences]
    if len(seqs) != h.n:
        raise ValueError("need one sequence per coordinate of h")
    N = len(seqs[0])
    if any(len(s) != N for s in seqs):
        raise ValueError("sequences must have equal length")
    if N < 1:
        raise ValueError("sequences must be nonempty")
    return float(h.values[tuple(seqs)].mean())


def _permutation_matrix(N: int) -> np.ndarray:
    """All permutations of range(N) as an (N!, N) index array."""
    return np.array(list(itertools.permutations(range(N))), dtype=int)


def brute_force_value(h: PotentialTensor, samples, N: int, all_free: bool = False) -> float:
    """Exact permutation average of exp(N*kappa), as (1/N)*log, by enumeration.

    By invariance of kappa under a common simultaneous relabeling the first
    permutation is pinned to the identity, leaving (n-1) free permutations;
    ``all_free=True`` (allowed only for N <= 4) enumerates all n instead.
    """
    samples = list(samples)
    n = h.n
    if len(samples) != n:
        raise ValueError("need one sorted sample per coordinate")
    if any(s.N != N for s in samples):
        raise ValueError("all samples must have length N")
    if n > BRUTE_FORCE_MAX_COORDS:
        raise ValueError(f"brute force capped at n <= {BRUTE_FORCE_MAX_COORDS}")
    cap = 4 if all_free else BRUTE_FORCE_MAX_N
    if N > cap:
        raise ValueError(f"brute force capped at N <= {cap} for this mode")

    seqs = [s.to_indices() for s in samples]
    if n == 1 and not all_free:
        return kappa(h, seqs)

    perms = _permutation_matrix(N)
    nfact = perms.shape[0]
    free = n if all_free else n - 1
    fixed = [] if all_free else [seqs[0]]
    moving = seqs[n - free:]

    if free == 1:
        x2 = moving[0][perms]  # (N!, N)
        if n == 1:
            logk = h.values[x2.T].sum(axis=0)
        else:
            logk = h.values[fixed[0][None, :].repeat(nfact, 0), x2].sum(axis=1)
        total = logsumexp(logk)
    elif free == 2:
        xa = moving[0][perms]
        xb = moving[1][perms]
        # accumulate sum_j h[..., xa_j, xb_j] over an (N!, N!) grid, chunked in j
        acc = np.zeros((nfact, nfact))
        for j in range(N):
            if n == 2:
                acc += h.values[xa[:, j][:, None], xb[:, j][None, :]]
            else:
                acc += h.values[fixed[0][j], xa[:, j][:, None], xb[:, j][None, :]]
        total = logsumexp(acc)
    else:  # free == 3, only reachable with all_free and n == 3, N <= 4
        xa = moving[0][perms]
        xb = moving[1][perms]
        xc = moving[2][perms]
        acc = np.zeros((nfact, nfact, nfact))
        for j in range(N):
            acc += h.values[
                xa[:, j][:, None, None], xb[:, j][None, :, None], xc[:, j][None, None, :]
            ]
        total = logsumexp(acc)

    lf = log_factorials(N)
    return float((total - free * lf[N]) / N)


def _enum_bounded_total(total, caps, shape):
    """Yield integer arrays of the given shape with entries summing to `total`,
    whose axis-line sums never exceed the running caps.

    `caps` is a list of per-axis residual vectors, mutated in place during the
    walk and restored on backtrack.
    """
    cells = list(np.ndindex(*shape))
    ncell = len(cells)
    work = np.zeros(shape, dtype=np.int64)

    def cell_cap(c):
        return min(cap[ci] for cap, ci in zip(caps, c))

    def rec(k, left):
        if k == ncell:
            if left == 0:
                yield work
            return
        c = cells[k]
        ub = min(left, cell_cap(c))
        # capacity of the remaining cells bounds the value from below
        suffix = 0
        for c2 in cells[k + 1:]:
            suffix += cell_cap(c2)
            if suffix >= left:
                break
        lb = max(0, left - suffix)
        if lb > ub:
            return
        for v in range(lb, ub + 1):
            work[c] = v
            for cap, ci in zip(caps, c):
                cap[ci] -= v
            yield from rec(k + 1, left - v)
            for cap, ci in zip(caps, c):
                cap[ci] += v
            work[c] = 0

    yield from rec(0, total)


def _enum_margin_tensors(margins):
    """Yield every nonnegative integer tensor with the given margins.

    `margins` is a list of n integer lists sharing a common total. Recursion
    peels off axis 0: each but the last slice is a capped composition of its
    margin entry, and the final slice reduces to an (n-1)-margin instance.
    """
    n = len(margins)
    if n == 1:
        yield np.asarray(margins[0], dtype=np.int64)
        return
    m0 = margins[0]
    d0 = len(m0)
    res = [list(m) for m in margins[1:]]
    subshape = tuple(len(m) for m in res)
    out = np.zeros((d0,) + subshape, dtype=np.int64)

    def rec(t):
        if t == d0 - 1:
            if sum(res[0]) != m0[t]:
                return
            for sub in _enum_margin_tensors([list(r) for r in res]):
                out[t] = sub
                yield out
                out[t] = 0
            return
        # _enum_bounded_total keeps `res` decremented by the slice while its
        # generator is suspended at the yield, so recursion sees the residuals
        for sub in _enum_bounded_total(m0[t], res, subshape):
            out[t] = sub
            yield from rec(t + 1)
            out[t] = 0

    yield from rec(0)


def enumerate_contingency(margins, budget: int | None = None):
    """Stream every contingency tensor with the given TypeCounts margins.

    Each tensor is yielded exactly once; `budget` caps the number of yielded
    tensors and raises EnumerationBudgetExceeded past it, which callers may
    treat as a signal to fall back to Monte Carlo.
    """
    margins = list(margins)
    Ns = {m.N for m in margins}
    if len(Ns) != 1:
        raise ValueError("all margins must share the same total N")
    seen = 0
    alphabets = tuple(m.alphabet for m in margins)
    for entries in _enum_margin_tensors([list(m.counts) for m in margins]):
        seen += 1
        if budget is not None and seen > budget:
            raise EnumerationBudgetExceeded(
                f"contingency enumeration exceeded budget of {budget} tensors"
            )
        yield ContingencyTensor(alphabets, entries.copy(), tuple(margins), check=False)


@lru_cache(maxsize=1024)
def _margin_log_factorial_sum(margins) -> float:
    lf = log_factorials(margins[0].N)
    return float(sum(lf[np.asarray(m.counts)].sum() for m in margins))


def coset_log_count(T: ContingencyTensor) -> float:
    """log of the number of reduced permutation tuples realizing joint type T.

    With the first permutation pinned to the identity the count is
    prod_i prod_t N_i(t)! / prod_w T(w)!; summed over all tensors with the
    same margins the exponentials total (N!)^(n-1).
    """
    lf = log_factorials(T.N)
    cell_part = lf[T.entries].sum()
    return _margin_log_factorial_sum(T.margins) - float(cell_part)


def finite_n_value(
    h: PotentialTensor,
    mus,
    N: int,
    budget: int | None = DEFAULT_ENUM_BUDGET,
) -> float:
    """Exact mutual-pressure value at finite N via the joint-type decomposition.

    Builds the canonical micro-states for the marginals and evaluates
    (1/N) * logsumexp over contingency tensors T of
    [coset count + sum_w h(w) T(w) - (n-1) log N!].
    """
    mus = list(mus)
    if len(mus) != h.n:
        raise ValueError("need one marginal per coordinate of h")
    samples = [approximating_sample(m, N) for m in mus]
    if h.n == 1:
        return kappa(h, [samples[0].to_indices()])
    margins = [s.type_counts for s in samples]
    lf = log_factorials(N)
    terms = []
    for T in enumerate_contingency(margins, budget=budget):
        terms.append(coset_log_count(T) + float((h.values * T.entries).sum()))
    return float((logsumexp(np.asarray(terms)) - (h.n - 1) * lf[N]) / N)


def _sample_kappa_logs(eval_at, seqs, N, S, rng):
    """N*kappa for S independent uniform permutation tuples, first pinned to id.

    `eval_at` maps a tuple of (S, N) coordinate arrays to h values of the same
    shape; `seqs` are length-N coordinate vectors (symbol indices or reals).
    """
    cols = [np.broadcast_to(seqs[0], (S, N))]
    for s in seqs[1:]:
        # uniform random permutations via argsort of iid uniforms
        keys = rng.random((S, N))
        perm = np.argsort(keys, axis=1)
        cols.append(np.asarray(s)[perm])
    return eval_at(*cols).sum(axis=1)


def mc_value(
    h: PotentialTensor,
    mus,
    N: int,
    samples: int,
    seed: int,
    bootstrap: int = 200,
) -> MutualPressureEstimate:
    """Monte Carlo mutual-pressure estimate with bootstrap standard error.

    Averages exp(N*kappa) over uniformly sampled permutation tuples; the
    estimate is biased low for finite sample counts by concavity of log.
    """
    mus = list(mus)
    if samples < 2:
        raise ValueError("need at least 2 Monte Carlo samples")
    micro = [approximating_sample(m, N) for m in mus]
    seqs = [s.to_indices() for s in micro]
    if h.n == 1:
        v = kappa(h, [seqs[0]])
        return MutualPressureEstimate(
            value=v, method="monte-carlo", N=N, stderr=0.0, samples=samples
        )
    rng = substream(seed, "mc")

    def eval_at(*cols):
        return h.values[tuple(c.astype(int) for c in cols)]

    logk = _sample_kappa_logs(eval_at, seqs, N, samples, rng)
    value = float((logsumexp(logk) - math.log(samples)) / N)
    if h.values.max() == h.values.min():
        stderr = 0.0
    else:
        rs = substream(seed, "mc-bootstrap")
        boots = np.empty(bootstrap)
        for b in range(bootstrap):
            idx = rs.integers(0, samples, samples)
            boots[b] = (logsumexp(logk[idx]) - math.log(samples)) / N
        stderr = float(boots.std(ddof=1))
    return MutualPressureEstimate(
        value=value, method="monte-carlo", N=N, stderr=stderr, samples=samples
    )
