import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats
from scipy.special import expit, softmax

from dftoric.core import pushforward_metric_check
from dftoric.errors import InfiniteSampleSpace, OutcomeNotInSpace, ThetaOutOfDomain
from dftoric.families import (CATALOG, binomial, categorical, check_fisher, fisher_metric_expectation,
                              fisher_metric_hessian, inclusion_into_categorical, make_family, multinomial,
                              multinomial_outcomes, negative_binomial, normal_known_variance, poisson,
                              product)

FAMILIES = [poisson(), categorical(1), categorical(3), binomial(1), binomial(7), multinomial(3, 2),
            multinomial(4, 3), negative_binomial(1), negative_binomial(3), normal_known_variance()]


def ids(f):
    return f.label


def scipy_pmf(fam, theta):
    """Reference pmf over the family's (truncated) support from scipy.stats."""
    t = np.atleast_1d(theta)
    ks, _, _ = fam.support(t)
    if fam.name == "poisson":
        return stats.poisson(np.exp(t[0])).pmf(ks)
    if fam.name == "binomial":
        return stats.binom(fam.params["n"], expit(t[0])).pmf(ks)
    if fam.name == "negative-binomial":
        return stats.nbinom(fam.params["r"], 1 - np.exp(t[0])).pmf(ks)
    if fam.name == "categorical":
        return softmax(np.append(t, 0.0))
    if fam.name == "multinomial":
        p = softmax(np.append(t, 0.0))
        return np.array([stats.multinomial(fam.params["n"], p).pmf(k) for k in ks])
    raise AssertionError(fam.name)


@pytest.mark.parametrize("fam", [f for f in FAMILIES if f.kind != "continuous"], ids=ids)
def test_probabilities_match_scipy(fam, rng):
    for t in fam.potential.sample(rng, 5):
        assert np.allclose(fam.probabilities(t), scipy_pmf(fam, t), rtol=1e-10, atol=1e-15)


@pytest.mark.parametrize("fam", FAMILIES, ids=ids)
def test_normalisation_and_log_partition(fam, rng):
    for t in fam.potential.sample(rng, 5):
        assert fam.total_mass(t) == pytest.approx(1.0, abs=1e-12)
        assert fam.log_partition(t) == pytest.approx(fam.potential(t), abs=1e-10)


@pytest.mark.parametrize("fam", FAMILIES, ids=ids)
def test_fisher_crosscheck(fam, rng):
    assert check_fisher(fam, fam.potential.sample(rng, 10)).passed


def test_fisher_against_scipy_variances(rng):
    t = 0.3
    assert fisher_metric_expectation(poisson(), t)[0, 0] == pytest.approx(stats.poisson(np.exp(t)).var(), rel=1e-10)
    assert fisher_metric_expectation(binomial(5), t)[0, 0] == pytest.approx(stats.binom(5, expit(t)).var(), rel=1e-10)
    t = -0.7
    nb = stats.nbinom(3, 1 - np.exp(t)).var()
    assert fisher_metric_expectation(negative_binomial(3), t)[0, 0] == pytest.approx(nb, rel=1e-9)


def test_closed_form_fisher_values():
    assert fisher_metric_hessian(poisson(), 1.0) == pytest.approx(np.array([[np.e]]))
    for t in (-2.0, 0.0, 3.5):
        assert fisher_metric_hessian(normal_known_variance(), t) == pytest.approx(np.array([[1.0]]))
        assert fisher_metric_expectation(normal_known_variance(), t)[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_poisson_truncation_tail(rng):
    fam = poisson()
    for t in (-1.0, 2.0, 5.0):
        K = fam.truncation(t)
        assert K >= 200
        assert stats.poisson(np.exp(t)).sf(K - 1) < 1e-12


def test_negative_binomial_truncation_near_boundary():
    fam = negative_binomial(2)
    t = -0.01
    K = fam.truncation(t)
    assert K > 200
    assert stats.nbinom(2, 1 - np.exp(t)).sf(K - 1) < 1e-12


def test_multinomial_outcome_order():
    out = multinomial_outcomes(3, 2)
    assert out[0] == (2, 0, 0) and out[-1] == (0, 0, 2)
    assert out == sorted(out, reverse=True)
    assert len(out) == 6 and all(sum(k) == 2 for k in out)


def test_product_of_categoricals():
    fam = product(categorical(1), categorical(1))
    assert len(fam.outcomes) == 4
    th = np.array([0.4, -1.1])
    assert fam.potential(th) == pytest.approx(np.log1p(np.exp(0.4)) + np.log1p(np.exp(-1.1)))
    p = fam.probabilities(th)
    p1 = categorical(1).probabilities([0.4])
    p2 = categorical(1).probabilities([-1.1])
    assert np.allclose(p, np.outer(p1, p2).ravel())


def test_product_needs_finite_families():
    with pytest.raises(InfiniteSampleSpace):
        product(poisson(), categorical(1))


def test_inclusion_matrix_binomial():
    f = inclusion_into_categorical(binomial(2))
    assert np.allclose(f.A, [[-2.0], [-1.0]])
    assert np.allclose(f.B, [0.0, np.log(2.0)])


def test_inclusion_matrix_segre_source():
    f = inclusion_into_categorical(product(categorical(1), categorical(1)))
    assert np.allclose(f.A, [[1, 1], [1, 0], [0, 1]])
    assert np.allclose(f.B, 0)


@pytest.mark.parametrize("fam", [binomial(3), multinomial(3, 2), product(categorical(1), categorical(2))], ids=ids)
def test_inclusion_preserves_distributions_and_metric(fam, rng):
    f = inclusion_into_categorical(fam)
    cat = categorical(len(fam.outcomes) - 1)
    xs = fam.potential.sample(rng, 5)
    for t in xs:
        assert np.allclose(cat.probabilities(f(t)), fam.probabilities(t), atol=1e-14)
    assert pushforward_metric_check(f, xs).passed


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_theta_recovered_from_probabilities(theta):
    fam = categorical(3)
    assert np.allclose(fam.theta_from_probabilities(fam.probabilities(theta)), theta, atol=1e-9)


@given(st.floats(-4, -0.05))
def test_negative_binomial_theta_roundtrip(t):
    fam = negative_binomial(2)
    p = fam.probabilities([t])[:5]
    assert fam.theta_from_probabilities(p) == pytest.approx([t], abs=1e-10)


def test_errors():
    with pytest.raises(OutcomeNotInSpace):
        binomial(2).probability(3, [0.0])
    with pytest.raises(OutcomeNotInSpace):
        poisson().probability(-1, [0.0])
    with pytest.raises(ThetaOutOfDomain):
        negative_binomial(2).probability(1, [0.1])
    with pytest.raises(InfiniteSampleSpace):
        normal_known_variance().support([0.0])
    with pytest.raises(InfiniteSampleSpace):
        poisson().support()
    with pytest.raises(ValueError):
        binomial(31)
    with pytest.raises(ValueError):
        multinomial(7, 2)
    with pytest.raises(KeyError):
        make_family("gamma")


def test_catalog_defaults():
    assert set(CATALOG) == {"poisson", "categorical", "binomial", "multinomial", "negative-binomial",
                            "normal-known-var"}
    assert make_family("binomial").params == {"n": 3}
    assert make_family("binomial", n="5").params == {"n": 5}
    assert not make_family("normal-known-var").toric
    d = make_family("poisson").describe()
    assert d["dim"] == 1 and d["toric"] and d["sample_space"] == "countable"


def test_normal_density():
    fam = normal_known_variance()
    assert fam.probability(0.3, [1.0]) == pytest.approx(stats.norm(1.0, 1.0).pdf(0.3))
