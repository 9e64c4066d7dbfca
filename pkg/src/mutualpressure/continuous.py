"""Pressure and mutual pressure on [-R,R]^n, and the discretization bridge.

Continuous integrals use tensorized Gauss-Legendre quadrature (e^h is smooth
on a compact box). Continuous mutual-pressure instances are reduced to the
discrete machinery by quantile binning with conditional-mean representatives;
purely atomic instances round-trip exactly, which is the reverse direction of
the embedding of a finite alphabet into [-R,R].
"""

import ast
import math
from dataclasses import dataclass, field

import numpy as np

from ._util import logsumexp, substream
from .measures import Pmf
from .microstates import MutualPressureEstimate, _sample_kappa_logs
from .dual import DualityReport, mutual_pressure_limit
from .pressure import PotentialTensor

__all__ = [
    "ContinuousPotential",
    "QuadratureGrid",
    "QuantileSample",
    "MarginalSpec",
    "expression_potential",
    "catalog_potential",
    "quadrature_pressure",
    "continuous_marginal_potential",
    "quantile_sample",
    "discretize",
    "continuous_mutual_pressure",
    "mc_value_continuous",
    "continuous_duality_check",
    "embed_discrete",
]

MASS_TOL = 1e-8


@dataclass(frozen=True)
class ContinuousPotential:
    """Real function on [-R,R]^n with a declared sup-norm bound.

    `fn` takes n broadcastable coordinate arrays and returns an array of the
    broadcast shape.
    """

    R: float
    n: int
    fn: object = field(repr=False)
    bound: float = math.inf
    name: str = "custom"

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    def __call__(self, *coords):
        vals = np.asarray(self.fn(*coords), dtype=float)
        if np.isfinite(self.bound) and vals.size:
            m = float(np.abs(vals).max())
            if m > self.bound + 1e-9:
                raise ValueError(
                    f"potential exceeded its declared bound: {m} > {self.bound}"
                )
        return vals


_ALLOWED_CALLS = ("exp", "log")


def _compile_expression(expr: str, n: int):
    """Safe evaluator for the small potential grammar: + - * ** exp log,
    numeric constants, and coordinates x1..xn."""
    tree = ast.parse(expr, mode="eval")
    names = {f"x{i + 1}": i for i in range(n)}

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            c = float(node.value)
            return lambda coords: c
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(f"unknown coordinate {node.id!r}")
            i = names[node.id]
            return lambda coords: coords[i]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            sub = build(node.operand)
            sign = -1.0 if isinstance(node.op, ast.USub) else 1.0
            return lambda coords: sign * sub(coords)
        if isinstance(node, ast.BinOp) and isinstance(
            node.op, (ast.Add, ast.Sub, ast.Mult, ast.Pow)
        ):
            left, right = build(node.left), build(node.right)
            op = {
                ast.Add: np.add,
                ast.Sub: np.subtract,
                ast.Mult: np.multiply,
                ast.Pow: np.power,
            }[type(node.op)]
            return lambda coords: op(left(coords), right(coords))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            if node.func.id not in _ALLOWED_CALLS or node.keywords or len(node.args) != 1:
                raise ValueError(f"call not in the potential grammar: {ast.dump(node)}")
            sub = build(node.args[0])
            if node.func.id == "exp":
                return lambda coords: np.exp(sub(coords))
            # guarded log: clamps away from zero instead of returning -inf
            return lambda coords: np.log(np.maximum(sub(coords), 1e-300))
        raise ValueError(f"expression node not in the potential grammar: {ast.dump(node)}")

    f = build(tree)
    return lambda *coords: np.asarray(f(np.broadcast_arrays(*coords)), dtype=float)


def expression_potential(expr: str, R: float, n: int, bound: float) -> ContinuousPotential:
    return ContinuousPotential(R=R, n=n, fn=_compile_expression(expr, n), bound=bound, name=expr)


def catalog_potential(name: str, R: float, n: int, **params) -> ContinuousPotential:
    """Built-in potentials: zero, linear (sum c_i x_i), product (prod x_i),
    gaussian (-a sum x_i^2)."""
    if name == "zero":
        return ContinuousPotential(R, n, lambda *c: np.zeros(np.broadcast(*c).shape), 0.0, "zero")
    if name == "linear":
        coef = np.asarray(params.get("coefficients", np.ones(n)), dtype=float)
        if coef.shape != (n,):
            raise ValueError("linear potential needs n coefficients")
        return ContinuousPotential(
            R, n,
            lambda *c: sum(k * x for k, x in zip(coef, c)) + np.zeros(np.broadcast(*c).shape),
            float(np.abs(coef).sum()) * R, "linear",
        )
    if name == "product":
        return ContinuousPotential(R, n, lambda *c: _product_fn(c), R**n, "product")
    if name == "gaussian":
        a = float(params.get("a", 1.0))
        return ContinuousPotential(
            R, n, lambda *c: -a * sum(np.square(x) for x in c) + np.zeros(np.broadcast(*c).shape),
            a * n * R**2, "gaussian",
        )
    raise ValueError(f"unknown catalog potential {name!r}")


def _product_fn(coords):
    out = np.ones(np.broadcast(*coords).shape)
    for c in coords:
        out = out * c
    return out


@dataclass(frozen=True)
class QuadratureGrid:
    """Per-axis Gauss-Legendre nodes and weights mapped to [-R,R]."""

    R: float
    n: int
    order: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def gauss_legendre(cls, R: float, n: int, order: int) -> "QuadratureGrid":
        if order < 2:
            raise ValueError("quadrature order must be >= 2")
        t, w = np.polynomial.legendre.leggauss(order)
        return cls(R=R, n=n, order=order, nodes=R * t, weights=R * w)

    def mesh(self):
        return np.meshgrid(*([self.nodes] * self.n), indexing="ij")

    def log_weight_tensor(self):
        lw = np.log(self.weights)
        out = np.zeros((self.order,) * self.n)
        for i in range(self.n):
            shape = [1] * self.n
            shape[i] = self.order
            out = out + lw.reshape(shape)
        return out


@dataclass(frozen=True)
class QuantileSample:
    """Sorted micro-state of real points in [-R,R]."""

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("need a nonempty 1-d point vector")
        if np.any(np.diff(p) < 0):
            raise ValueError("points must be nondecreasing")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def N(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class MarginalSpec:
    """A one-dimensional marginal: either a density on a grid or an atomic
    measure (points + masses)."""

    kind: str  # "density" | "atomic"
    points: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)  # density values or atom masses

    def __post_init__(self):
        x = np.asarray(self.points, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        if self.kind not in ("density", "atomic"):
            raise ValueError("kind must be 'density' or 'atomic'")
        if x.shape != m.shape or x.ndim != 1:
            raise ValueError("points and masses must be 1-d and equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        total = self.total_mass(x, m, self.kind)
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"marginal mass {total} is not 1 within {MASS_TOL}")
        x.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "masses", m)

    @staticmethod
    def total_mass(x, m, kind):
        return float(np.trapezoid(m, x)) if kind == "density" else float(m.sum())

    @classmethod
    def uniform(cls, R: float, grid_points: int = 513) -> "MarginalSpec":
        x = np.linspace(-R, R, grid_points)
        return cls("density", x, np.full(grid_points, 1.0 / (2 * R)))

    @classmethod
    def atomic(cls, points, masses) -> "MarginalSpec":
        return cls("atomic", np.asarray(points, float), np.asarray(masses, float))

    def cdf_inverse(self, q):
        """Left-continuous generalized inverse CDF, vectorized over q."""
        q = np.asarray(q, dtype=float)
        if self.kind == "atomic":
            cum = np.cumsum(self.masses)
            cum[-1] = max(cum[-1], 1.0)  # guard float dust at the top
            idx = np.searchsorted(cum, q, side="left")
            idx = np.clip(idx, 0, self.points.size - 1)
            return self.points[idx]
        x, p = self.points, self.masses
        mids = 0.5 * (p[1:] + p[:-1]) * np.diff(x)
        cdf = np.concatenate([[0.0], np.cumsum(mids)])
        cdf = cdf / cdf[-1]
        return np.interp(q, cdf, x)


def quadrature_pressure(h: ContinuousPotential, order: int) -> float:
    """log integral of e^h over [-R,R]^n by tensorized Gauss-Legendre."""
    grid = QuadratureGrid.gauss_legendre(h.R, h.n, order)
    vals = h(*grid.mesh())
    return float(logsumexp(vals + grid.log_weight_tensor()))


def continuous_marginal_potential(h: ContinuousPotential, i: int, order: int, at=None):
    """h_i(x) = log integral of e^h over the other n-1 coordinates.

    Evaluated at the axis-i quadrature nodes by default, or at the points
    `at`. Returns (points, values).
    """
    if not 0 <= i < h.n:
        raise IndexError(f"axis {i} out of range for n={h.n}")
    grid = QuadratureGrid.gauss_legendre(h.R, h.n, order)
    x = grid.nodes if at is None else np.asarray(at, dtype=float)
    if h.n == 1:
        return x, h(x)
    axes = [grid.nodes] * h.n
    axes[i] = x
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = h(*mesh)
    lw = np.log(grid.weights)
    for j in range(h.n):
        if j == i:
            continue
        shape = [1] * h.n
        shape[j] = grid.order
        vals = vals + lw.reshape(shape)
    out = logsumexp(vals, axis=tuple(j for j in range(h.n) if j != i))
    return x, np.asarray(out)


def quantile_sample(mu: MarginalSpec, N: int) -> QuantileSample:
    """Micro-state xi_j = F^{-1}((j - 1/2)/N); converges to mu in moments."""
    if N < 1:
        raise ValueError("N must be >= 1")
    q = (np.arange(1, N + 1) - 0.5) / N
    return QuantileSample(mu.cdf_inverse(q))


def _bin_representatives(mu: MarginalSpec, d: int):
    """Equal-probability quantile bins; representative = conditional mean.

    Returns (rep points, masses). Atomic measures with exactly d atoms pass
    through unchanged; atoms may be split across bin boundaries otherwise.
    """
    if mu.kind == "atomic":
        k = mu.points.size
        if d > k:
            raise ValueError(f"requested {d} levels but the measure has {k} atoms")
        if d == k:
            return mu.points.copy(), mu.masses.copy()
        # split atoms across equal-probability boundaries
        reps = np.empty(d)
        masses = np.full(d, 1.0 / d)
        cum = 0.0
        ai = 0
        remaining = mu.masses.astype(float).copy()
        for b in range(d):
            need = 1.0 / d
            acc = 0.0
            wsum = 0.0
            while need > 1e-15 and ai < mu.points.size:
                take = min(need, remaining[ai])
                acc += take * mu.points[ai]
                wsum += take
                remaining[ai] -= take
                need -= take
                if remaining[ai] <= 1e-15:
                    ai += 1
            reps[b] = acc / wsum
        return reps, masses
    # density: conditional mean of bin b equals d * integral of F^{-1} over
    # the quantile interval [b/d, (b+1)/d]
    t, w = np.polynomial.legendre.leggauss(64)
    reps = np.empty(d)
    for b in range(d):
        lo, hi = b / d, (b + 1) / d
        q = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        reps[b] = d * 0.5 * (hi - lo) * float(w @ mu.cdf_inverse(q))
    return reps, np.full(d, 1.0 / d)


def discretize(h: ContinuousPotential, mus, d: int):
    """Reduce a continuous instance to a discrete one with d levels per axis.

    Returns (PotentialTensor, list of Pmf, point map: per-axis representative
    points). Discretizing an atomic measure at its own atom count is exact.
    """
    mus = list(mus)
    if len(mus) != h.n:
        raise ValueError("need one marginal per coordinate")
    if d < 2:
        raise ValueError("need at least 2 levels")
    reps, pmfs = [], []
    for mu in mus:
        r, m = _bin_representatives(mu, d)
        m = m / m.sum()
        reps.append(r)
        pmfs.append(Pmf.from_weights(m))
    mesh = np.meshgrid(*reps, indexing="ij")
    hvals = h(*mesh)
    pot = PotentialTensor(tuple(p.alphabet for p in pmfs), hvals)
    return pot, pmfs, reps


def continuous_mutual_pressure(
    h: ContinuousPotential, mus, d: int, tol: float = 1e-12
) -> MutualPressureEstimate:
    """Mutual pressure of a continuous instance via discretization at d, 2d,
    and 4d levels; the last increment is reported as the error proxy."""
    trace = []
    for levels in (d, 2 * d, 4 * d):
        pot, pmfs, _ = discretize(h, mus, levels)
        est = mutual_pressure_limit(pot, pmfs, tol=tol)
        trace.append((levels, est.value))
    proxy = abs(trace[-1][1] - trace[-2][1])
    return MutualPressureEstimate(
        value=trace[-1][1],
        method="limit-dual",
        residual=proxy,
        trace=tuple(trace),
    )


def mc_value_continuous(
    h: ContinuousPotential, samples, S: int, seed: int, bootstrap: int = 200
) -> MutualPressureEstimate:
    """Monte Carlo permutation average with kappa evaluated at real coordinates.

    Shares the sampling core (and therefore the permutation stream for a given
    seed) with the discrete estimator.
    """
    samples = list(samples)
    if len(samples) != h.n:
        raise ValueError("need one micro-state per coordinate")
    N = samples[0].N
    if any(s.N != N for s in samples):
        raise ValueError("micro-states must share a common length")
    seqs = [s.points for s in samples]
    if h.n == 1:
        v = float(h(seqs[0]).mean())
        return MutualPressureEstimate(
            value=v, method="monte-carlo", N=N, stderr=0.0, samples=S
        )
    if S < 2:
        raise ValueError("need at least 2 Monte Carlo samples")
    rng = substream(seed, "mc")
    logk = _sample_kappa_logs(lambda *cols: h(*cols), seqs, N, S, rng)
    value = float((logsumexp(logk) - math.log(S)) / N)
    if np.ptp(logk) == 0:
        stderr = 0.0
    else:
        rs = substream(seed, "mc-bootstrap")
        boots = np.empty(bootstrap)
        for b in range(bootstrap):
            idx = rs.integers(0, S, S)
            boots[b] = (logsumexp(logk[idx]) - math.log(S)) / N
        stderr = float(boots.std(ddof=1))
    return MutualPressureEstimate(
        value=value, method="monte-carlo", N=N, stderr=stderr, samples=S
    )


def continuous_duality_check(
    h: ContinuousPotential, order: int, d: int, dense_grid: int = 1025
) -> DualityReport:
    """Evaluate the continuous pressure inequality at the Gibbs marginals.

    P(h) by quadrature; Gibbs marginal entropies from the marginal potentials
    (H_i = log Z - mu_i(h_i), using that the i-th Gibbs marginal has density
    e^{h_i}/Z); P_sym via discretization. The gap shrinks under joint
    refinement for smooth h.
    """
    p = quadrature_pressure(h, order)
    grid = QuadratureGrid.gauss_legendre(h.R, h.n, order)
    entropies = []
    specs = []
    xs_dense = np.linspace(-h.R, h.R, dense_grid)
    for i in range(h.n):
        _, hi_nodes = continuous_marginal_potential(h, i, order)
        pi_nodes = np.exp(hi_nodes - p)
        entropies.append(p - float((grid.weights * pi_nodes * hi_nodes).sum()))
        _, hi_dense = continuous_marginal_potential(h, i, order, at=xs_dense)
        dens = np.exp(hi_dense - p)
        dens = dens / np.trapezoid(dens, xs_dense)
        specs.append(MarginalSpec("density", xs_dense, dens))
    psym = continuous_mutual_pressure(h, specs, d).value
    ent = float(sum(entropies))
    return DualityReport(
        pressure=p,
        mutual_pressure=psym,
        entropy_sum=ent,
        gap=p - psym - ent,
        marginal_distances=(0.0,) * h.n,
    )


def embed_discrete(pot: PotentialTensor, mus, R: float = 1.0):
    """Embed a discrete instance into [-R,R]: atoms at equally spaced points,
    the potential looking up the tensor at the nearest atom.

    Returns (ContinuousPotential, list of atomic MarginalSpec).
    """
    mus = list(mus)
    n = pot.n
    points = [np.linspace(-R + R / 4, R - R / 4, m.alphabet.d) for m in mus]

    def lookup(*coords):
        idx = tuple(
            np.abs(np.asarray(c, float)[..., None] - pts).argmin(axis=-1)
            for c, pts in zip(coords, points)
        )
        return pot.values[idx]

    cont = ContinuousPotential(R=R, n=n, fn=lookup, bound=pot.sup_norm, name="embedded")
    specs = [MarginalSpec.atomic(pts, m.weights) for pts, m in zip(points, mus)]
    return cont, specs
