"""Central finite differences used as independent oracles throughout."""

from __future__ import annotations

from typing import Callable

import numpy as np

REL_STEP = 1e-5


def _steps(x: np.ndarray, rel: float) -> np.ndarray:
    return rel * np.maximum(1.0, np.abs(x))


def gradient(f: Callable, x, rel: float = REL_STEP, order: int = 2) -> np.ndarray:
    """Gradient of a scalar function by central differences.

    ``order=2`` is the three-point stencil, ``order=4`` the five-point one.
    """
    x = np.asarray(x, dtype=float)
    h = _steps(x, rel)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        if order == 2:
            g[i] = (f(x + e) - f(x - e)) / (2 * h[i])
        elif order == 4:
            g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h[i])
        else:
            raise ValueError(f"unsupported stencil order {order}")
    return g


def jacobian(F: Callable, x, rel: float = REL_STEP, order: int = 2) -> np.ndarray:
    """Jacobian ``J[i, j] = dF_i / dx_j``; F may return real or complex arrays."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, rel)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        if order == 2:
            d = (np.asarray(F(x + e)) - np.asarray(F(x - e))) / (2 * h[j])
        else:
            d = (-np.asarray(F(x + 2 * e)) + 8 * np.asarray(F(x + e))
                 - 8 * np.asarray(F(x - e)) + np.asarray(F(x - 2 * e))) / (12 * h[j])
        cols.append(np.ravel(d))
    return np.stack(cols, axis=-1)


def hessian(f: Callable, x, rel: float = REL_STEP) -> np.ndarray:
    """Hessian of a scalar function from function values only."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _steps(x, rel)
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4 * h[i] * h[j])
    return H


def scaled_error(a, b) -> float:
    """Max absolute deviation, scaled by ``max(1, max|b|)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))
