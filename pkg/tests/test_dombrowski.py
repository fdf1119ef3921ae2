import numpy as np
import pytest
from hypothesis import given, strategies as st

from dftoric.core import AffineMap, DuallyFlatSpace, exp_potential, flat_cn_potential, quadratic_potential
from dftoric.dombrowski import (KahlerStructure, TangentChartPoint, check_closed_form, check_kahler_function,
                                check_kahler_immersion, connector_apply, hamiltonian_vector_field,
                                poisson_kahler_basis, rk4_step, tangent_lift, vector_field_pushforward)
from dftoric.errors import DomainViolation, SingularOmega
from dftoric.families import binomial, categorical, multinomial, negative_binomial, poisson

POISSON = poisson().space


def tm_samples(space, rng, k):
    q = space.potential.sample(rng, k)
    return np.hstack((q, rng.uniform(-5, 5, size=q.shape)))


def test_poisson_metric_at_origin():
    K = KahlerStructure(POISSON)
    p = TangentChartPoint(0.0, 0.7)
    assert np.allclose(K.g_matrix(p), np.eye(2))
    assert np.allclose(K.omega_matrix(p), [[0, 1], [-1, 0]])
    assert np.allclose(K.J @ K.J, -np.eye(2))


def test_metric_blocks_match_hessian(rng):
    space = multinomial(3, 2).space
    K = KahlerStructure(space)
    q = space.potential.sample(rng, 1)[0]
    p = TangentChartPoint(q, np.ones(2))
    h = space.potential.hessian(q)
    assert np.allclose(K.g_matrix(p)[:2, :2], h) and np.allclose(K.g_matrix(p)[2:, 2:], h)
    assert np.allclose(K.g_matrix(p)[:2, 2:], 0)


def test_tangent_point_roundtrip():
    p = TangentChartPoint.from_complex([1 + 2j, -3j])
    assert np.allclose(p.vector, [1, 0, 2, -3])
    assert np.allclose(TangentChartPoint.from_vector(p.vector).z, [1 + 2j, -3j])
    with pytest.raises(ValueError):
        TangentChartPoint([0.0], [1.0, 2.0])


def test_domain_violation():
    K = KahlerStructure(negative_binomial(1).space)
    with pytest.raises(DomainViolation):
        K.g_matrix(TangentChartPoint(0.5, 0.0))


@pytest.mark.parametrize("space", [POISSON, categorical(2).space, binomial(4).space, multinomial(3, 2).space,
                                   negative_binomial(2).space, DuallyFlatSpace(flat_cn_potential(2))],
                         ids=["poisson", "cat2", "bin4", "mult32", "nb2", "flat2"])
def test_omega_closed_and_compatible(space, rng):
    rep = check_closed_form(space, tm_samples(space, rng, 8), rng)
    assert rep.passed, str(rep)


def test_hamiltonian_field_of_fiber_coordinate():
    space = DuallyFlatSpace(quadratic_potential(1))
    f = lambda v: v[1]  # noqa: E731
    X = hamiltonian_vector_field(space, f, np.array([0.3, -0.2]))
    assert np.allclose(X, [1.0, 0.0], atol=1e-9)
    W = KahlerStructure(space).omega_matrix(TangentChartPoint(0.3, -0.2))
    # omega(X, e) = df(e)
    for e in np.eye(2):
        assert X @ W @ e == pytest.approx(e[1], abs=1e-9)


def test_hamiltonian_field_fd_matches_gradient(rng):
    basis = poisson_kahler_basis()
    for f, grad in basis.values():
        for v in tm_samples(POISSON, rng, 3):
            assert np.allclose(hamiltonian_vector_field(POISSON, f, v),
                               hamiltonian_vector_field(POISSON, f, v, grad), atol=1e-7)


def test_singular_omega():
    p = exp_potential(1)
    from dftoric.core import Potential
    flat = DuallyFlatSpace(Potential("degenerate", 1, p.domain, lambda x: 0.0, lambda x: np.zeros(1),
                                     lambda x: np.zeros((1, 1))))
    with pytest.raises(SingularOmega):
        hamiltonian_vector_field(flat, lambda v: v[0], np.zeros(2))


def test_rk4_exact_on_linear_field():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    v = rk4_step(lambda u: A @ u, np.array([1.0, 0.0]), 0.1)
    assert np.allclose(v, [np.cos(0.1), -np.sin(0.1)], atol=1e-8)


@pytest.mark.parametrize("name", list(poisson_kahler_basis()))
def test_basis_functions_are_killing(name, rng):
    f, grad = poisson_kahler_basis()[name]
    rep = check_kahler_function(POISSON, f, tm_samples(POISSON, rng, 6), grad)
    assert rep.passed, str(rep)


def test_basis_functions_are_periodic(rng):
    for f, _ in poisson_kahler_basis().values():
        for v in tm_samples(POISSON, rng, 5):
            assert f(v + np.array([0.0, 4 * np.pi])) == pytest.approx(f(v), abs=1e-12)


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.integers(0, 1000))
def test_linear_combinations_are_killing(coef, seed):
    basis = list(poisson_kahler_basis().values())

    def f(v):
        return sum(c * b[0](v) for c, b in zip(coef, basis))

    def grad(v):
        return sum(c * b[1](v) for c, b in zip(coef, basis))

    rng = np.random.default_rng(seed)
    vs = np.column_stack((rng.uniform(-1.5, 1.5, 3), rng.uniform(-5, 5, 3)))
    assert check_kahler_function(POISSON, f, vs, grad).passed


@pytest.mark.parametrize("f", [lambda v: v[0], lambda v: v[0] ** 2 + v[1] ** 2, lambda v: np.exp(v[0]) * v[1]],
                         ids=["q", "q2+r2", "exp(q)r"])
def test_non_kahler_functions_fail(f, rng):
    rep = check_kahler_function(POISSON, f, tm_samples(POISSON, rng, 4))
    assert not rep.passed and rep.violation("killing") > 1e-2


def test_connector_returns_vertical_part():
    out = connector_apply(POISSON, [0.1], [2.0], [3.0, -4.0])
    assert out.tolist() == [-4.0]
    with pytest.raises(ValueError):
        connector_apply(POISSON, [0.1], [2.0], [3.0])
    with pytest.raises(DomainViolation):
        connector_apply(negative_binomial(1).space, [1.0], [0.0], [0.0, 0.0])


def test_connector_of_pushforward_is_directional_derivative():
    # Y(x) = (x^2, x) on R; K(Y_* X) = dY(X) since the chart is affine
    Y = lambda x: np.array([x[0] ** 2])  # noqa: E731
    A = vector_field_pushforward(Y, [1.5], [2.0])
    assert np.allclose(A, [2.0, 6.0], atol=1e-8)
    assert np.allclose(connector_apply(POISSON, [1.5], Y([1.5]), A), [6.0], atol=1e-8)


def test_affine_isometry_lifts_to_kahler_immersion(rng):
    src = DuallyFlatSpace(flat_cn_potential(1))
    tgt = POISSON
    f = AffineMap([[4 * np.pi]], [-np.log(4.0)], src, tgt)
    F = tangent_lift(f)
    rep = check_kahler_immersion(F, src, tgt, tm_samples(src, rng, 6))
    assert rep.passed, str(rep)


def test_binomial_into_categorical_lifts(rng):
    from dftoric.families import inclusion_into_categorical
    fam = binomial(3)
    f = inclusion_into_categorical(fam)
    rep = check_kahler_immersion(tangent_lift(f), fam.space, f.target, tm_samples(fam.space, rng, 5))
    assert rep.passed, str(rep)


def test_non_isometric_lift_fails(rng):
    src = DuallyFlatSpace(quadratic_potential(1))
    F = tangent_lift(AffineMap([[2.0]], [0.0], src, src))
    rep = check_kahler_immersion(F, src, src, tm_samples(src, rng, 3))
    assert rep.violation("holomorphic") < 1e-8
    assert not rep.passed and rep.violation("isometric") == pytest.approx(3.0, rel=1e-6)
