import math

import numpy as np
import pytest

from mutualpressure.continuous import (
    MarginalSpec,
    catalog_potential,
    continuous_duality_check,
    continuous_marginal_potential,
    continuous_mutual_pressure,
    discretize,
    embed_discrete,
    expression_potential,
    mc_value_continuous,
    quadrature_pressure,
    quantile_sample,
)
from mutualpressure.dual import mutual_pressure_limit
from mutualpressure.measures import Pmf
from mutualpressure.microstates import approximating_sample, mc_value
from mutualpressure.pressure import PotentialTensor


def random_pmf(rng, d):
    w = rng.random(d) + 0.05
    return Pmf.from_weights(w / w.sum())


# --- potentials ------------------------------------------------------------

def test_expression_potential_evaluates():
    h = expression_potential("x1*x2 + 0.5*x1", 1.0, 2, bound=1.5)
    assert h(0.5, 0.4) == pytest.approx(0.45, abs=1e-14)


def test_expression_grammar_rejects_weirdness():
    with pytest.raises(ValueError):
        expression_potential("__import__('os')", 1.0, 1, bound=1.0)
    with pytest.raises(ValueError):
        expression_potential("x3", 1.0, 2, bound=1.0)


def test_declared_bound_is_enforced():
    h = expression_potential("10*x1", 1.0, 1, bound=1.0)
    with pytest.raises(ValueError):
        h(np.array([0.9]))


def test_catalog_potentials():
    assert catalog_potential("zero", 1.0, 2)(0.3, -0.7) == 0.0
    lin = catalog_potential("linear", 1.0, 2, coefficients=[1.0, -2.0])
    assert lin(0.5, 0.25) == pytest.approx(0.0, abs=1e-14)
    prod = catalog_potential("product", 1.0, 2)
    assert prod(0.5, -0.4) == pytest.approx(-0.2, abs=1e-14)
    gauss = catalog_potential("gaussian", 1.0, 1, a=2.0)
    assert gauss(0.5) == pytest.approx(-0.5, abs=1e-14)


# --- quadrature ------------------------------------------------------------

def test_quadrature_pressure_zero_potential():
    # integral of 1 over [-R,R]^n is (2R)^n
    for R, n in [(1.0, 1), (1.0, 2), (0.5, 3)]:
        h = catalog_potential("zero", R, n)
        assert quadrature_pressure(h, 8) == pytest.approx(
            n * math.log(2 * R), abs=1e-12
        )


def test_quadrature_pressure_linear_closed_form():
    # integral of e^x over [-1,1] = e - 1/e
    h = catalog_potential("linear", 1.0, 1, coefficients=[1.0])
    want = math.log(math.e - 1 / math.e)
    assert quadrature_pressure(h, 16) == pytest.approx(want, abs=1e-12)


def test_quadrature_converges_with_order():
    h = catalog_potential("product", 1.0, 2)
    coarse = quadrature_pressure(h, 4)
    fine = quadrature_pressure(h, 24)
    finer = quadrature_pressure(h, 48)
    assert abs(finer - fine) < abs(fine - coarse) + 1e-13
    assert abs(finer - fine) < 1e-12


def test_marginal_potential_separable_case():
    # for h = x + y, h_1(x) = x + log(e - 1/e)
    h = catalog_potential("linear", 1.0, 2, coefficients=[1.0, 1.0])
    xs = np.linspace(-0.9, 0.9, 7)
    _, vals = continuous_marginal_potential(h, 0, 24, at=xs)
    np.testing.assert_allclose(vals, xs + math.log(math.e - 1 / math.e), atol=1e-10)


# --- marginal specs and sampling -------------------------------------------

def test_uniform_quantiles():
    mu = MarginalSpec.uniform(1.0)
    s = quantile_sample(mu, 4)
    np.testing.assert_allclose(s.points, [-0.75, -0.25, 0.25, 0.75], atol=1e-12)


def test_atomic_quantiles_left_continuous():
    mu = MarginalSpec.atomic([-0.5, 0.5], [0.5, 0.5])
    s = quantile_sample(mu, 4)
    np.testing.assert_allclose(s.points, [-0.5, -0.5, 0.5, 0.5], atol=1e-14)


def test_marginal_spec_rejects_bad_mass():
    with pytest.raises(ValueError):
        MarginalSpec.atomic([-0.5, 0.5], [0.5, 0.6])


def test_quantile_sample_moments_converge():
    mu = MarginalSpec.uniform(1.0)
    for N in (10, 100, 1000):
        s = quantile_sample(mu, N)
        assert abs(s.points.mean()) < 1e-12
        assert abs((s.points**2).mean() - 1 / 3) < 1.0 / N


# --- discretization --------------------------------------------------------

def test_discretize_atomic_at_atom_count_is_exact():
    rng = np.random.default_rng(0)
    pts = np.sort(rng.uniform(-1, 1, 4))
    mass = random_pmf(rng, 4).weights
    mu = MarginalSpec.atomic(pts, mass)
    h = catalog_potential("product", 1.0, 2)
    pot, pmfs, reps = discretize(h, [mu, mu], 4)
    np.testing.assert_array_equal(reps[0], pts)
    np.testing.assert_allclose(pmfs[0].weights, mass, atol=1e-14)


def test_discretize_atomic_too_many_levels_errors():
    mu = MarginalSpec.atomic([-0.5, 0.5], [0.5, 0.5])
    h = catalog_potential("zero", 1.0, 1)
    with pytest.raises(ValueError):
        discretize(h, [mu], 3)


def test_density_bin_representatives_are_conditional_means():
    # uniform on [-1,1] with d bins: representatives are the bin midpoints
    mu = MarginalSpec.uniform(1.0)
    h = catalog_potential("zero", 1.0, 1)
    _, _, reps = discretize(h, [mu], 4)
    np.testing.assert_allclose(reps[0], [-0.75, -0.25, 0.25, 0.75], atol=1e-10)


# --- continuous mutual pressure --------------------------------------------

def test_continuous_mp_zero_potential_is_zero():
    h = catalog_potential("zero", 1.0, 2)
    mus = [MarginalSpec.uniform(1.0)] * 2
    est = continuous_mutual_pressure(h, mus, 8)
    assert est.value == pytest.approx(0.0, abs=1e-10)


def test_continuous_mp_refinement_trace_stabilizes():
    h = catalog_potential("product", 1.0, 2)
    mus = [MarginalSpec.uniform(1.0)] * 2
    est = continuous_mutual_pressure(h, mus, 8)
    (d1, v1), (d2, v2), (d3, v3) = est.trace
    assert (d1, d2, d3) == (8, 16, 32)
    assert abs(v3 - v2) < abs(v2 - v1) + 1e-12
    assert est.residual == pytest.approx(abs(v3 - v2), abs=1e-15)


def test_separable_potential_has_zero_mutual_part():
    # h(x,y) = x + y decouples: P_sym = mu_1(x) + mu_2(y)
    h = catalog_potential("linear", 1.0, 2, coefficients=[1.0, 1.0])
    mus = [MarginalSpec.uniform(1.0)] * 2
    est = continuous_mutual_pressure(h, mus, 24)
    assert est.value == pytest.approx(0.0, abs=1e-5)


# --- hat embedding ---------------------------------------------------------

def test_embed_discrete_round_trip_exact():
    rng = np.random.default_rng(1)
    for _ in range(5):
        d = int(rng.integers(2, 5))
        pot = PotentialTensor.from_values(rng.normal(size=(d, d)))
        mus = [random_pmf(rng, d) for _ in range(2)]
        cont, specs = embed_discrete(pot, mus)
        pot2, pmfs2, _ = discretize(cont, specs, d)
        np.testing.assert_array_equal(pot2.values, pot.values)
        for a, b in zip(pmfs2, mus):
            np.testing.assert_array_equal(a.weights, b.weights)


def test_embedded_limit_value_matches_discrete():
    rng = np.random.default_rng(2)
    pot = PotentialTensor.from_values(rng.normal(size=(3, 3)))
    mus = [random_pmf(rng, 3) for _ in range(2)]
    cont, specs = embed_discrete(pot, mus)
    dpot, dpmfs, _ = discretize(cont, specs, 3)
    a = mutual_pressure_limit(pot, mus).value
    b = mutual_pressure_limit(dpot, dpmfs).value
    assert b == pytest.approx(a, abs=1e-12)


def test_embedded_mc_matches_discrete_same_seed():
    # feed the hat-mapped images of the same canonical micro-states through
    # the continuous sampler: identical permutation stream, identical value
    rng = np.random.default_rng(3)
    pot = PotentialTensor.from_values(rng.normal(size=(3, 3)))
    mus = [random_pmf(rng, 3) for _ in range(2)]
    cont, specs = embed_discrete(pot, mus)
    N, S, seed = 12, 300, 5
    disc = mc_value(pot, mus, N, S, seed)
    micro = [approximating_sample(m, N) for m in mus]
    from mutualpressure.continuous import QuantileSample

    mapped = [
        QuantileSample(spec.points[s.to_indices()])
        for spec, s in zip(specs, micro)
    ]
    contest = mc_value_continuous(cont, mapped, S, seed)
    assert contest.value == disc.value
    assert contest.stderr == disc.stderr


# --- continuous duality ----------------------------------------------------

def test_continuous_duality_zero_potential():
    h = catalog_potential("zero", 1.0, 2)
    rep = continuous_duality_check(h, 16, 8)
    assert rep.pressure == pytest.approx(2 * math.log(2), abs=1e-12)
    assert rep.gap == pytest.approx(0.0, abs=1e-12)


def test_continuous_duality_small_gap_smooth_potential():
    h = catalog_potential("product", 1.0, 2)
    rep = continuous_duality_check(h, 24, 16)
    assert rep.gap > -1e-8
    assert rep.gap < 1e-3
