import math

import numpy as np
import pytest

from mutualpressure.measures import JointPmf, marginals, shannon_entropy
from mutualpressure.pressure import (
    PotentialTensor,
    gibbs_measure,
    marginal_potential,
    pressure,
    variational_gap,
)


def random_potential(rng, shape, scale=1.0):
    return PotentialTensor.from_values(rng.normal(scale=scale, size=shape))


def test_zero_potential_pressure_counts_states():
    for d, n in [(2, 1), (3, 2), (2, 3)]:
        h = PotentialTensor.zeros(d, n)
        assert pressure(h) == pytest.approx(n * math.log(d), abs=1e-12)


def test_constant_shift_moves_pressure_by_the_shift():
    rng = np.random.default_rng(0)
    h = random_potential(rng, (3, 3))
    shifted = PotentialTensor(h.alphabets, h.values + 0.7)
    assert pressure(shifted) == pytest.approx(pressure(h) + 0.7, abs=1e-12)


def test_pressure_is_stable_for_large_values():
    h = PotentialTensor.from_values(np.array([1000.0, 1000.0]))
    assert pressure(h) == pytest.approx(1000.0 + math.log(2), abs=1e-9)


def test_gibbs_measure_normalizes_and_orders():
    h = PotentialTensor.from_values(np.array([[2.0, 0.0], [0.0, 2.0]]))
    g = gibbs_measure(h)
    assert g.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert g.weights[0, 0] > g.weights[0, 1]


def test_gibbs_maximizes_the_variational_functional():
    # pressure = sup_mu [mu(h) + S(mu)], attained at the Gibbs measure
    rng = np.random.default_rng(1)
    for _ in range(20):
        h = random_potential(rng, (3, 2))
        g = gibbs_measure(h)
        assert variational_gap(h, g) == pytest.approx(0.0, abs=1e-10)
        w = rng.random((3, 2)) + 0.05
        mu = JointPmf.from_weights(w / w.sum())
        assert variational_gap(h, mu) >= -1e-12


def test_variational_gap_formula():
    rng = np.random.default_rng(2)
    h = random_potential(rng, (4, 3))
    w = rng.random((4, 3)) + 0.05
    mu = JointPmf.from_weights(w / w.sum())
    direct = pressure(h) - float((mu.weights * h.values).sum()) - shannon_entropy(mu)
    assert variational_gap(h, mu) == pytest.approx(direct, abs=1e-12)


def test_marginal_potential_matches_gibbs_marginal():
    # the i-th Gibbs marginal is proportional to exp of the marginal potential
    rng = np.random.default_rng(3)
    for _ in range(10):
        h = random_potential(rng, (3, 4, 2))
        g = gibbs_measure(h)
        for i, m in enumerate(marginals(g)):
            hi = marginal_potential(h, i)
            gi = np.exp(hi - pressure(h))
            np.testing.assert_allclose(m.weights, gi, atol=1e-12)


def test_marginal_potential_n1_is_h_itself():
    h = PotentialTensor.from_values(np.array([0.1, -0.2, 0.3]))
    np.testing.assert_allclose(marginal_potential(h, 0), h.values)


def test_marginal_potential_axis_out_of_range():
    h = PotentialTensor.zeros(2, 2)
    with pytest.raises(IndexError):
        marginal_potential(h, 2)


def test_match_indicator_values():
    h = PotentialTensor.match_indicator(3, 2, beta=2.5)
    assert h.values[1, 1] == 2.5
    assert h.values[0, 1] == 0.0
    assert pressure(h) == pytest.approx(math.log(6 + 3 * math.e**2.5), abs=1e-12)
