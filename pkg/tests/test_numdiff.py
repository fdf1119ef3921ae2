import numpy as np
import pytest
from hypothesis import given, strategies as st

from dftoric import numdiff

floats = st.floats(-3, 3, allow_nan=False)


@given(floats, floats)
def test_gradient_of_polynomial(a, b):
    f = lambda x: x[0] ** 3 + 2 * x[0] * x[1] ** 2
    expected = [3 * a**2 + 2 * b**2, 4 * a * b]
    g = numdiff.gradient(f, [a, b])
    assert np.allclose(g, expected, rtol=1e-7, atol=1e-7)


def test_five_point_stencil_is_more_accurate():
    f = lambda x: float(np.exp(3 * x[0]))
    exact = 3 * np.exp(3 * 0.4)
    e2 = abs(numdiff.gradient(f, [0.4], rel=1e-3)[0] - exact)
    e4 = abs(numdiff.gradient(f, [0.4], rel=1e-3, order=4)[0] - exact)
    assert e4 < e2 / 100


def test_unknown_stencil_rejected():
    with pytest.raises(ValueError):
        numdiff.gradient(lambda x: x[0], [0.0], order=3)


def test_complex_jacobian_layout():
    F = lambda v: np.array([np.exp(v[0] + 1j * v[1]), v[0] * v[1]])
    J = numdiff.jacobian(F, [0.3, -0.2])
    z = np.exp(0.3 - 0.2j)
    assert J.shape == (2, 2)
    assert np.allclose(J, [[z, 1j * z], [-0.2, 0.3]], atol=1e-8)


def test_hessian_from_values():
    f = lambda x: float(np.sin(x[0]) * np.exp(x[1]))
    x = np.array([0.7, -0.4])
    s, c, e = np.sin(0.7), np.cos(0.7), np.exp(-0.4)
    assert np.allclose(numdiff.hessian(f, x), [[-s * e, c * e], [c * e, s * e]], atol=1e-5)


def test_scaled_error():
    assert numdiff.scaled_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert numdiff.scaled_error([0.1], [0.0]) == pytest.approx(0.1)
    assert numdiff.scaled_error([110.0], [100.0]) == pytest.approx(0.1)
    assert numdiff.scaled_error([], []) == 0.0
