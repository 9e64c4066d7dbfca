import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mutualpressure.measures import (
    Alphabet,
    JointPmf,
    Pmf,
    marginals,
    mutual_information,
    product_measure,
    relative_entropy,
    shannon_entropy,
)


def random_joint(rng, shape):
    w = rng.random(shape) + 0.05
    return JointPmf.from_weights(w / w.sum())


def test_alphabet_rejects_duplicate_labels():
    with pytest.raises(ValueError):
        Alphabet(("a", "a"))


def test_pmf_rejects_bad_mass():
    with pytest.raises(ValueError):
        Pmf.from_weights([0.5, 0.6])
    with pytest.raises(ValueError):
        Pmf.from_weights([1.1, -0.1])


def test_pmf_weights_are_read_only():
    p = Pmf.uniform(3)
    with pytest.raises(ValueError):
        p.weights[0] = 0.9


def test_uniform_entropy_is_log_d():
    for d in (2, 3, 5, 17):
        assert shannon_entropy(Pmf.uniform(d)) == pytest.approx(math.log(d), abs=1e-14)


def test_point_mass_entropy_is_zero():
    p = Pmf.from_weights([1.0, 0.0, 0.0])
    assert shannon_entropy(p) == 0.0


def test_entropy_nonnegative_and_bounded():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = int(rng.integers(2, 8))
        w = rng.random(d) + 1e-3
        p = Pmf.from_weights(w / w.sum())
        s = shannon_entropy(p)
        assert 0.0 <= s <= math.log(d) + 1e-12


def test_relative_entropy_zero_iff_equal():
    rng = np.random.default_rng(1)
    w = rng.random(4) + 0.1
    p = Pmf.from_weights(w / w.sum())
    assert relative_entropy(p, p) == pytest.approx(0.0, abs=1e-14)
    q = Pmf.uniform(4)
    assert relative_entropy(p, q) > 0.0


def test_relative_entropy_infinite_off_support():
    p = Pmf.from_weights([0.5, 0.5, 0.0])
    q = Pmf.from_weights([0.5, 0.0, 0.5])
    assert relative_entropy(p, q) == math.inf
    # reverse direction is finite: supp(q') contains supp(p')
    assert math.isfinite(relative_entropy(Pmf.from_weights([1.0, 0.0, 0.0]), p))


def test_marginals_of_product_recover_factors():
    rng = np.random.default_rng(2)
    ps = []
    for d in (2, 3, 4):
        w = rng.random(d) + 0.1
        ps.append(Pmf.from_weights(w / w.sum()))
    joint = product_measure(ps)
    for got, want in zip(marginals(joint), ps):
        np.testing.assert_allclose(got.weights, want.weights, atol=1e-14)


def test_marginals_preserve_zero_mass_without_renormalizing():
    mu = JointPmf.from_weights([[0.5, 0.0], [0.5, 0.0]])
    m0, m1 = marginals(mu)
    np.testing.assert_allclose(m0.weights, [0.5, 0.5])
    np.testing.assert_allclose(m1.weights, [1.0, 0.0])


def test_chain_rule_additivity_for_products():
    rng = np.random.default_rng(3)
    for _ in range(20):
        ps = []
        for d in (2, 3):
            w = rng.random(d) + 0.1
            ps.append(Pmf.from_weights(w / w.sum()))
        joint = product_measure(ps)
        assert shannon_entropy(joint) == pytest.approx(
            sum(shannon_entropy(p) for p in ps), abs=1e-12
        )


def test_mutual_information_zero_for_products_positive_otherwise():
    rng = np.random.default_rng(4)
    for _ in range(20):
        mu = random_joint(rng, (3, 4))
        prod = product_measure(marginals(mu))
        assert mutual_information(prod) == pytest.approx(0.0, abs=1e-12)
        assert mutual_information(mu) >= -1e-12


def test_mutual_information_equals_kl_to_product():
    rng = np.random.default_rng(5)
    for shape in [(2, 2), (3, 4), (2, 3, 2)]:
        mu = random_joint(rng, shape)
        prod = product_measure(marginals(mu))
        assert mutual_information(mu) == pytest.approx(
            relative_entropy(mu, prod), abs=1e-12
        )


@given(st.lists(st.floats(min_value=0.01, max_value=10.0), min_size=2, max_size=6))
def test_entropy_invariant_under_permutation(weights):
    w = np.asarray(weights) / sum(weights)
    p = Pmf.from_weights(w)
    q = Pmf.from_weights(w[::-1].copy())
    assert shannon_entropy(p) == pytest.approx(shannon_entropy(q), abs=1e-12)
