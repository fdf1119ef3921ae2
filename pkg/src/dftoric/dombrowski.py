"""Kähler structure on TM = C^n induced by a dually flat chart.

In the affine chart ``(q, r)`` of TM (``z = q + i r``) the metric is
``blockdiag(h, h)``, the complex structure is the constant
``J = [[0, -I], [I, 0]]`` and ``omega = [[0, h], [-h, 0]]`` with ``h = h(q)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import numdiff
from .core import AffineMap, DuallyFlatSpace, Report
from .errors import DomainViolation, SingularOmega

KILLING_STEP = 1e-3
KILLING_TOL = 1e-3
CLOSED_TOL = 1e-4


@dataclass(frozen=True)
class TangentChartPoint:
    """Point of TM: base coordinates ``q`` and fiber coordinates ``r``."""

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        if q.shape != r.shape:
            raise ValueError("q and r must have the same length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)

    @classmethod
    def from_complex(cls, z) -> "TangentChartPoint":
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return cls(z.real, z.imag)

    @classmethod
    def from_vector(cls, v) -> "TangentChartPoint":
        v = np.asarray(v, dtype=float)
        n = v.size // 2
        return cls(v[:n], v[n:])

    @property
    def z(self) -> np.ndarray:
        return self.q + 1j * self.r

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate((self.q, self.r))


def complex_structure(n: int) -> np.ndarray:
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


@dataclass(frozen=True)
class KahlerStructure:
    """``(g, J, omega)`` on TM for a dually flat space."""

    space: DuallyFlatSpace

    @property
    def n(self) -> int:
        return self.space.dim

    @property
    def J(self) -> np.ndarray:
        return complex_structure(self.n)

    def _h(self, p: TangentChartPoint) -> np.ndarray:
        if not self.space.potential.domain.contains(p.q):
            raise DomainViolation(f"base point {p.q} outside the domain")
        return self.space.metric(p.q)

    def g_matrix(self, p: TangentChartPoint) -> np.ndarray:
        h = self._h(p)
        Z = np.zeros_like(h)
        return np.block([[h, Z], [Z, h]])

    def omega_matrix(self, p: TangentChartPoint) -> np.ndarray:
        h = self._h(p)
        Z = np.zeros_like(h)
        return np.block([[Z, h], [-h, Z]])

    def g(self, p: TangentChartPoint, u, v) -> float:
        return float(np.asarray(u) @ self.g_matrix(p) @ np.asarray(v))

    def omega(self, p: TangentChartPoint, u, v) -> float:
        return float(np.asarray(u) @ self.omega_matrix(p) @ np.asarray(v))


def connector_apply(space: DuallyFlatSpace, base_point, fiber, tangent_of_TM) -> np.ndarray:
    """Connector ``K: T(TM) -> TM`` of the flat connection.

    Christoffel symbols vanish in the affine chart, so ``K`` returns the
    vertical part of the tangent vector.
    """
    base_point = np.atleast_1d(np.asarray(base_point, dtype=float))
    if not space.potential.domain.contains(base_point):
        raise DomainViolation(f"{base_point} outside the domain")
    A = np.asarray(tangent_of_TM, dtype=float)
    n = space.dim
    if A.shape != (2 * n,) or np.asarray(fiber).shape != (n,):
        raise ValueError("tangent vector must have length 2n and fiber length n")
    return A[n:].copy()


def vector_field_pushforward(Y: Callable, x, X) -> np.ndarray:
    """``Y_* X`` at ``x`` as a vector of T(TM) in chart coordinates ``(dx, dY)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    X = np.atleast_1d(np.asarray(X, dtype=float))
    dY = numdiff.jacobian(Y, x) @ X
    return np.concatenate((X, dY))


def kahler_tensors_at(space: DuallyFlatSpace, p: TangentChartPoint):
    """``(g, omega)`` as 2n x 2n matrices at ``p``."""
    K = KahlerStructure(space)
    return K.g_matrix(p), K.omega_matrix(p)


def check_closed_form(space: DuallyFlatSpace, samples, rng: np.random.Generator | None = None,
                      n_vectors: int = 5) -> Report:
    """``d omega = 0`` by finite differences, plus exact J/g/omega compatibility.

    ``samples`` are points of TM given as length-2n vectors ``(q, r)``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    K = KahlerStructure(space)
    n = K.n
    J = K.J
    samples = np.atleast_2d(samples)
    closed = jsq = compat = rand = 0.0

    def om(v):
        return K.omega_matrix(TangentChartPoint.from_vector(v)).ravel()

    for v in samples:
        p = TangentChartPoint.from_vector(v)
        # d[b, c, a] = d_a omega_bc
        d = numdiff.jacobian(om, v).reshape(2 * n, 2 * n, 2 * n)
        scale = max(1.0, float(np.max(np.abs(d))))
        # cyc[a, b, c] = d_a w_bc + d_b w_ca + d_c w_ab
        cyc = np.einsum("bca->abc", d) + np.einsum("cab->abc", d) + d
        closed = max(closed, float(np.max(np.abs(cyc))) / scale)
        G = K.g_matrix(p)
        W = K.omega_matrix(p)
        jsq = max(jsq, float(np.max(np.abs(J @ J + np.eye(2 * n)))))
        compat = max(compat, float(np.max(np.abs(J.T @ G @ J - G))),
                     float(np.max(np.abs(J.T @ G - W))))
        for _ in range(n_vectors):
            u, w = rng.standard_normal((2, 2 * n))
            s = max(1.0, abs(u @ G @ w))
            rand = max(rand, abs(K.g(p, J @ u, J @ w) - K.g(p, u, w)) / s,
                       abs(K.omega(p, u, w) - K.g(p, J @ u, w)) / s)
    return Report("kahler-closed", {
        "d-omega": (closed, CLOSED_TOL),
        "J-squared": (jsq, 0.0),
        "compatibility": (compat, 0.0),
        "random-vectors": (rand, 1e-12),
    }, len(samples))


def hamiltonian_vector_field(space: DuallyFlatSpace, f: Callable, p, grad: Callable | None = None) -> np.ndarray:
    """``X_f`` with ``omega(X_f, .) = df``, i.e. ``omega^T X_f = grad f``.

    ``f`` and ``grad`` take length-2n vectors ``(q, r)``. Without ``grad`` the
    differential is taken by central differences.
    """
    v = p.vector if isinstance(p, TangentChartPoint) else np.asarray(p, dtype=float)
    W = KahlerStructure(space).omega_matrix(TangentChartPoint.from_vector(v))
    df = np.asarray(grad(v), dtype=float) if grad is not None else numdiff.gradient(f, v)
    try:
        return np.linalg.solve(W.T, df)
    except np.linalg.LinAlgError as exc:
        raise SingularOmega(str(exc)) from exc


def rk4_step(field: Callable, v: np.ndarray, t: float) -> np.ndarray:
    k1 = field(v)
    k2 = field(v + 0.5 * t * k1)
    k3 = field(v + 0.5 * t * k2)
    k4 = field(v + t * k3)
    return v + t / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def check_kahler_function(space: DuallyFlatSpace, f: Callable, samples,
                          grad: Callable | None = None, t: float = KILLING_STEP) -> Report:
    """Killing test for ``X_f``: one RK4 step ``phi_t`` of its flow must satisfy
    ``|phi_t^* g - g| / t < 1e-3`` (all pairs of basis vectors)."""
    K = KahlerStructure(space)
    samples = np.atleast_2d(samples)
    worst = 0.0

    def X(v):
        return hamiltonian_vector_field(space, f, v, grad)

    for v in samples:
        D = numdiff.jacobian(lambda u: rk4_step(X, u, t), v)
        G0 = K.g_matrix(TangentChartPoint.from_vector(v))
        G1 = K.g_matrix(TangentChartPoint.from_vector(rk4_step(X, v, t)))
        worst = max(worst, float(np.max(np.abs(D.T @ G1 @ D - G0))) / t)
    return Report("kahler-function", {"killing": (worst, KILLING_TOL)}, len(samples))


def poisson_kahler_basis() -> dict:
    """Kähler functions of T(Poisson) with closed-form gradients, keyed by name."""

    def const(v):
        return 1.0

    def exp_q(v):
        return float(np.exp(v[0]))

    def cos_part(v):
        return float(np.exp(v[0] / 2) * np.cos(v[1] / 2))

    def sin_part(v):
        return float(np.exp(v[0] / 2) * np.sin(v[1] / 2))

    return {
        "1": (const, lambda v: np.zeros(2)),
        "exp(q)": (exp_q, lambda v: np.array([np.exp(v[0]), 0.0])),
        "exp(q/2)cos(r/2)": (cos_part, lambda v: 0.5 * np.exp(v[0] / 2) * np.array(
            [np.cos(v[1] / 2), -np.sin(v[1] / 2)])),
        "exp(q/2)sin(r/2)": (sin_part, lambda v: 0.5 * np.exp(v[0] / 2) * np.array(
            [np.sin(v[1] / 2), np.cos(v[1] / 2)])),
    }


# ---------------------------------------------------------------------------
# lifting affine maps to TM


def tangent_lift(f: AffineMap) -> Callable:
    """``f_*`` on TM in real coordinates: ``(q, r) -> (A q + B, A r)``."""
    n = f.source.dim

    def lifted(v):
        v = np.asarray(v, dtype=float)
        return np.concatenate((f.A @ v[:n] + f.B, f.A @ v[n:]))

    return lifted


def check_kahler_immersion(F: Callable, source: DuallyFlatSpace, target: DuallyFlatSpace,
                           samples) -> Report:
    """Holomorphy ``DF J = J' DF`` and isometry ``DF^T g' DF = g`` of a map
    ``TM -> TM'`` by finite-difference Jacobians."""
    Ks, Kt = KahlerStructure(source), KahlerStructure(target)
    J, Jt = Ks.J, Kt.J
    holo = iso = 0.0
    samples = np.atleast_2d(samples)
    for v in samples:
        D = numdiff.jacobian(F, v)
        holo = max(holo, numdiff.scaled_error(D @ J, Jt @ D))
        Gt = Kt.g_matrix(TangentChartPoint.from_vector(F(v)))
        iso = max(iso, numdiff.scaled_error(D.T @ Gt @ D, Ks.g_matrix(TangentChartPoint.from_vector(v))))
    return Report("kahler-immersion", {
        "holomorphic": (holo, 1e-6),
        "isometric": (iso, 1e-6),
    }, len(samples))
