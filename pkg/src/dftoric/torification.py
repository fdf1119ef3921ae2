"""Toric factorizations of the cataloged families.

Each toric family ``E`` comes with a Kähler target ``N`` (flat C, a projective
space ``P_n(c)`` or a hyperbolic disk ``D(c)``) and maps

    TE = C^n --tau--> N°  --kappa--> E

with ``kappa o tau`` equal to the bundle projection ``z -> Re z`` read in
natural parameters. Points of ``P_n`` are unnormalised homogeneous vectors in
C^{n+1}; tangent vectors are ambient vectors at the stored representative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from . import numdiff
from .core import (FOUR_PI, AffineMap, Domain, DuallyFlatSpace, Potential, Report,
                   flat_cn_potential, projective_potential)
from .dombrowski import KahlerStructure, TangentChartPoint
from .errors import NotToric, UnsupportedTarget
from .families import ExponentialFamily, categorical

LATTICE_PERIOD = FOUR_PI


def hermitian(z, w) -> complex:
    """``<z, w> = sum conj(z_k) w_k``."""
    return complex(np.vdot(z, w))


# ---------------------------------------------------------------------------
# target geometries


class TargetGeometry:
    """Kähler manifold with an isometric torus action, in ambient coordinates."""

    kind = ""
    torus_dim = 0
    ambient_dim = 0

    def metric(self, point, u, v) -> float:
        raise NotImplementedError

    def omega(self, point, u, v) -> float:
        """Kähler form ``omega(u, v) = g(J u, v)`` with J = multiplication by i."""
        return self.metric(point, 1j * np.asarray(u), v)

    def act(self, t, point) -> np.ndarray:
        raise NotImplementedError

    def action_differential(self, t) -> np.ndarray:
        """Diagonal of the (complex-linear) differential of the action."""
        raise NotImplementedError

    def distance(self, p, q) -> float:
        raise NotImplementedError

    def momentum(self, point) -> np.ndarray:
        raise UnsupportedTarget(f"no momentum map for {self.kind}")

    def momentum_image(self) -> Domain:
        raise UnsupportedTarget(f"no momentum image for {self.kind}")

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class FlatCn(TargetGeometry):
    """C^n with the Euclidean metric and ``[t].z = (e^{2 pi i t_k} z_k)``."""

    n: int = 1
    kind = "flat"

    @property
    def torus_dim(self):
        return self.n

    @property
    def ambient_dim(self):
        return self.n

    def metric(self, point, u, v) -> float:
        return float(np.real(np.vdot(u, v)))

    def action_differential(self, t):
        return np.exp(2j * np.pi * np.atleast_1d(np.asarray(t, dtype=float)))

    def act(self, t, point):
        return self.action_differential(t) * np.asarray(point, dtype=complex)

    def distance(self, p, q):
        return float(np.max(np.abs(np.asarray(p) - np.asarray(q))) / max(1.0, float(np.max(np.abs(q)))))

    def momentum(self, point):
        return -np.pi * np.abs(np.asarray(point)) ** 2

    def momentum_image(self):
        return Domain.negative_orthant(self.n)

    def describe(self):
        return {"kind": self.kind, "n": self.n}


@dataclass(frozen=True)
class ProjectiveSpace(TargetGeometry):
    """``P_n(c)``: Fubini-Study metric of holomorphic sectional curvature c."""

    n: int = 1
    c: float = 1.0
    kind = "projective"

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("projective space needs c > 0")

    @property
    def torus_dim(self):
        return self.n

    @property
    def ambient_dim(self):
        return self.n + 1

    @staticmethod
    def horizontal(z, w):
        """Component of ``w`` orthogonal to the complex line through ``z``."""
        return w - hermitian(z, w) / hermitian(z, z).real * z

    def metric(self, point, u, v) -> float:
        z = np.asarray(point, dtype=complex)
        nz = hermitian(z, z).real
        pu = self.horizontal(z, np.asarray(u, dtype=complex))
        pv = self.horizontal(z, np.asarray(v, dtype=complex))
        return 4.0 / self.c * float(np.real(np.vdot(pu, pv))) / nz

    def action_differential(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.concatenate((np.exp(2j * np.pi * t), [1.0 + 0j]))

    def act(self, t, point):
        return self.action_differential(t) * np.asarray(point, dtype=complex)

    def distance(self, p, q):
        """``1 - |<p, q>|^2 / (|p|^2 |q|^2)``; zero iff equal as points of P_n."""
        p = np.asarray(p, dtype=complex)
        q = np.asarray(q, dtype=complex)
        fid = abs(hermitian(p, q)) ** 2 / (hermitian(p, p).real * hermitian(q, q).real)
        return max(0.0, 1.0 - fid)

    def momentum(self, point):
        z = np.asarray(point, dtype=complex)
        return -FOUR_PI / self.c * np.abs(z[: self.n]) ** 2 / hermitian(z, z).real

    def momentum_image(self):
        return Domain.simplex(self.n, -FOUR_PI / self.c)

    def normalize(self, point):
        """Unit representative with the last nonzero coordinate real positive."""
        z = np.asarray(point, dtype=complex)
        z = z / np.linalg.norm(z)
        nz = np.flatnonzero(np.abs(z) > 1e-300)
        k = nz[-1]
        return z * np.exp(-1j * np.angle(z[k]))

    def describe(self):
        return {"kind": self.kind, "n": self.n, "c": self.c}


@dataclass(frozen=True)
class HyperbolicDisk(TargetGeometry):
    """``D(c)``, c < 0: ``ds^2 = -(4/c)(dx^2 + dy^2)/(1 - |z|^2)^2``, rotation action."""

    c: float = -1.0
    kind = "disk"
    torus_dim = 1
    ambient_dim = 1

    def __post_init__(self):
        if self.c >= 0:
            raise ValueError("hyperbolic disk needs c < 0")

    def metric(self, point, u, v) -> float:
        z = complex(np.asarray(point).ravel()[0])
        return float(-4.0 / self.c * np.real(np.vdot(u, v)) / (1 - abs(z) ** 2) ** 2)

    def action_differential(self, t):
        return np.exp(2j * np.pi * np.atleast_1d(np.asarray(t, dtype=float)))

    def act(self, t, point):
        return self.action_differential(t) * np.asarray(point, dtype=complex)

    def distance(self, p, q):
        return FlatCn(1).distance(p, q)

    def describe(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class ProductGeometry(TargetGeometry):
    """Riemannian product; points and vectors are concatenated ambient arrays."""

    factors: tuple = ()
    kind = "product"

    @property
    def torus_dim(self):
        return sum(f.torus_dim for f in self.factors)

    @property
    def ambient_dim(self):
        return sum(f.ambient_dim for f in self.factors)

    def _split(self, a, sizes):
        a = np.asarray(a)
        out, i = [], 0
        for s in sizes:
            out.append(a[i:i + s])
            i += s
        return out

    def _amb(self, a):
        return self._split(a, [f.ambient_dim for f in self.factors])

    def _tor(self, t):
        return self._split(np.atleast_1d(t), [f.torus_dim for f in self.factors])

    def metric(self, point, u, v):
        return sum(f.metric(p, a, b) for f, p, a, b in
                   zip(self.factors, self._amb(point), self._amb(u), self._amb(v)))

    def action_differential(self, t):
        return np.concatenate([f.action_differential(s) for f, s in zip(self.factors, self._tor(t))])

    def act(self, t, point):
        return np.concatenate([f.act(s, p) for f, s, p in
                               zip(self.factors, self._tor(t), self._amb(point))])

    def distance(self, p, q):
        return max(f.distance(a, b) for f, a, b in zip(self.factors, self._amb(p), self._amb(q)))

    def momentum(self, point):
        return np.concatenate([f.momentum(p) for f, p in zip(self.factors, self._amb(point))])

    def split(self, point):
        return self._amb(point)

    def contains_momentum(self, mu) -> bool:
        parts = self._tor(mu)
        return all(f.momentum_image().contains(m) for f, m in zip(self.factors, parts))

    def describe(self):
        return {"kind": self.kind, "factors": [f.describe() for f in self.factors]}


def momentum_map(target: TargetGeometry, point) -> np.ndarray:
    """Momentum map of the torus action, with the sign conventions ``-pi|z|^2``."""
    return target.momentum(point)


def _in_momentum_image(target: TargetGeometry, mu) -> bool:
    if isinstance(target, ProductGeometry):
        return target.contains_momentum(mu)
    return target.momentum_image().contains(mu)


# ---------------------------------------------------------------------------
# toric factorizations


@dataclass(frozen=True)
class ToricFactorization:
    """``tau: C^n -> N°`` and ``kappa: N° -> E`` for a toric family."""

    family: ExponentialFamily
    target: TargetGeometry
    tau: Callable
    kappa: Callable
    lattice_period: np.ndarray = field(default=None)
    name: str = ""

    def __post_init__(self):
        if self.lattice_period is None:
            object.__setattr__(self, "lattice_period", np.full(self.family.dim, LATTICE_PERIOD))

    @property
    def dim(self) -> int:
        return self.family.dim

    def kappa_theta(self, point) -> np.ndarray:
        """Natural parameter of the distribution ``kappa(point)``."""
        fam = self.family
        if fam.kind == "countable":
            ks = np.arange(fam.dim + 2)
            return fam.theta_from_probabilities(self.kappa(point, ks), ks)
        return fam.theta_from_probabilities(self.kappa(point))

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        """Random points ``z = theta + i r`` of TE."""
        q = self.family.potential.sample(rng, k)
        r = rng.uniform(-2 * LATTICE_PERIOD, 2 * LATTICE_PERIOD, size=q.shape)
        return q + 1j * r


def _as_complex(z):
    return np.atleast_1d(np.asarray(z, dtype=complex))


def _projective_tau(z):
    z = _as_complex(z)
    return np.concatenate((np.exp(z / 2), [1.0 + 0j]))


def _poisson(fam):
    def tau(z):
        return 2 * np.exp(_as_complex(z) / 2)

    def kappa(w, ks=None):
        ks = np.arange(fam.truncation([np.log(abs(complex(_as_complex(w)[0])) ** 2 / 4)])) if ks is None else np.asarray(ks)
        lam = abs(complex(_as_complex(w)[0])) ** 2 / 4
        return np.exp(-lam + ks * np.log(lam) - gammaln(ks + 1.0))

    return ToricFactorization(fam, FlatCn(1), tau, kappa, name="poisson")


def _categorical(fam):
    def kappa(w, ks=None):
        a = np.abs(_as_complex(w)) ** 2
        return a / a.sum()

    return ToricFactorization(fam, ProjectiveSpace(fam.dim, 1.0), _projective_tau, kappa, name="categorical")


def _binomial(fam):
    n = fam.params["n"]
    ks = np.arange(n + 1)
    logc = gammaln(n + 1.0) - gammaln(ks + 1.0) - gammaln(n - ks + 1.0)

    def kappa(w, _=None):
        z1, z2 = _as_complex(w)
        a1, a2 = abs(z1) ** 2, abs(z2) ** 2
        return np.exp(logc + ks * np.log(a1) + (n - ks) * np.log(a2) - n * np.log(a1 + a2))

    return ToricFactorization(fam, ProjectiveSpace(1, 1.0 / n), _projective_tau, kappa, name="binomial")


def _multinomial(fam):
    m, n = fam.params["m"], fam.params["n"]
    K = np.array(fam.outcomes, dtype=float)
    logc = gammaln(n + 1.0) - gammaln(K + 1.0).sum(axis=1)

    def kappa(w, _=None):
        a = np.abs(_as_complex(w)) ** 2
        return np.exp(logc + K @ np.log(a) - n * np.log(a.sum()))

    return ToricFactorization(fam, ProjectiveSpace(m - 1, 1.0 / n), _projective_tau, kappa, name="multinomial")


def _negative_binomial(fam):
    r = fam.params["r"]

    def tau(z):
        return np.exp(_as_complex(z) / 2)

    def kappa(w, ks=None):
        a = abs(complex(_as_complex(w)[0])) ** 2
        if ks is None:
            ks = np.arange(fam.truncation([np.log(a)]))
        ks = np.asarray(ks, dtype=float)
        logc = gammaln(ks + r) - gammaln(r) - gammaln(ks + 1.0)
        return np.exp(logc + ks * np.log(a) + r * np.log1p(-a))

    return ToricFactorization(fam, HyperbolicDisk(-1.0 / r), tau, kappa, name="negative-binomial")


def _product(fam):
    f1, f2 = (make_factorization(c) for c in fam.components)
    n1 = f1.dim
    target = ProductGeometry((f1.target, f2.target))

    def tau(z):
        z = _as_complex(z)
        return np.concatenate((f1.tau(z[:n1]), f2.tau(z[n1:])))

    def kappa(w, _=None):
        a, b = target.split(w)
        return np.outer(f1.kappa(a), f2.kappa(b)).ravel()

    return ToricFactorization(fam, target, tau, kappa,
                              lattice_period=np.concatenate((f1.lattice_period, f2.lattice_period)),
                              name=f"{f1.name}x{f2.name}")


_BUILDERS = {
    "poisson": _poisson,
    "categorical": _categorical,
    "binomial": _binomial,
    "multinomial": _multinomial,
    "negative-binomial": _negative_binomial,
    "product": _product,
}


def make_factorization(family: ExponentialFamily) -> ToricFactorization:
    """The explicit toric factorization of a cataloged toric family."""
    if not family.toric:
        raise NotToric(f"{family.label} is not toric")
    try:
        build = _BUILDERS[family.name]
    except KeyError:
        raise NotToric(f"no torification known for {family.label}") from None
    return build(family)


# ---------------------------------------------------------------------------
# compatible potentials and the action-induced metric


def compatible_potential(target: TargetGeometry) -> Potential:
    """Potential on R^n whose negative gradient has the momentum image."""
    if isinstance(target, FlatCn):
        return flat_cn_potential(target.n)
    if isinstance(target, ProjectiveSpace):
        return projective_potential(target.n, target.c)
    raise UnsupportedTarget(f"no compatible potential for {target.kind}")


def action_chart(target: TargetGeometry, x) -> np.ndarray:
    """``x -> phi^x(1, p)``: flow of ``-J x_N`` from ``p = (1, ..., 1)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(target, FlatCn):
        return np.exp(2 * np.pi * x).astype(complex)
    if isinstance(target, ProjectiveSpace):
        return np.concatenate((np.exp(2 * np.pi * x), [1.0])).astype(complex)
    raise UnsupportedTarget(f"no action chart for {target.kind}")


def fundamental_field(target: TargetGeometry, xi, point) -> np.ndarray:
    """``xi_N(point) = d/dt|0 [exp(t xi)].point`` as an ambient vector."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    z = np.asarray(point, dtype=complex)
    if isinstance(target, ProjectiveSpace):
        xi = np.concatenate((xi, [0.0]))
    return 2j * np.pi * xi * z


def metric_from_action(target: TargetGeometry, x, u, v) -> float:
    """``h_x(u, v) = g_{phi^x(1,p)}(u_N, v_N)``."""
    w = action_chart(target, x)
    return target.metric(w, fundamental_field(target, u, w), fundamental_field(target, v, w))


def potential_chart_map(fact: ToricFactorization) -> AffineMap:
    """Affine change from the compatible-potential chart ``x`` to natural
    parameters: ``theta = 4 pi x`` (``- ln 4`` for Poisson)."""
    target = fact.target
    pot = compatible_potential(target)
    n = fact.dim
    B = np.full(n, -np.log(4.0)) if fact.family.name == "poisson" else np.zeros(n)
    return AffineMap(FOUR_PI * np.eye(n), B, DuallyFlatSpace(pot), fact.family.space)


# ---------------------------------------------------------------------------
# checks


def check_factorization(fact: ToricFactorization, zs, rng: np.random.Generator | None = None) -> Report:
    """``kappa o tau = Re``, lattice periodicity, torus equivariance and the
    local isometry ``tau^* g_N = blockdiag(h, h)``."""
    rng = np.random.default_rng(0) if rng is None else rng
    zs = np.atleast_2d(np.asarray(zs, dtype=complex))
    n = fact.dim
    T = fact.target
    K = KahlerStructure(fact.family.space)
    kt = per = eq = pull = 0.0
    for z in zs:
        w = fact.tau(z)
        kt = max(kt, numdiff.scaled_error(fact.kappa_theta(w), z.real))
        k = rng.integers(-3, 4, size=n)
        per = max(per, T.distance(fact.tau(z + 1j * fact.lattice_period * k), w))
        t = rng.uniform(0, 1, size=n)
        eq = max(eq, T.distance(fact.tau(z + 1j * fact.lattice_period * t), T.act(t, w)))

        def real_tau(v):
            return fact.tau(v[:n] + 1j * v[n:])

        D = numdiff.jacobian(real_tau, np.concatenate((z.real, z.imag)))
        G = np.array([[T.metric(w, D[:, a], D[:, b]) for b in range(2 * n)] for a in range(2 * n)])
        pull = max(pull, numdiff.scaled_error(G, K.g_matrix(TangentChartPoint.from_complex(z))))
    return Report(f"factorization[{fact.name}]", {
        "kappa-tau": (kt, 1e-10),
        "periodicity": (per, 1e-12),
        "equivariance": (eq, 1e-12),
        "pullback-metric": (pull, 1e-5),
    }, len(zs))


def check_action_isometry(target: TargetGeometry, points, rng: np.random.Generator | None = None) -> Report:
    """The torus action preserves the metric and the Kähler form."""
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    d = target.ambient_dim
    for p in points:
        t = rng.uniform(0, 1, size=target.torus_dim)
        u, v = rng.standard_normal((2, d)) + 1j * rng.standard_normal((2, d))
        D = target.action_differential(t)
        q = target.act(t, p)
        for form in (target.metric, target.omega):
            a, b = form(q, D * u, D * v), form(p, u, v)
            worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return Report(f"action-isometry[{target.kind}]", {"isometry": (worst, 1e-10)}, len(points))


def check_momentum_gradient(fact: ToricFactorization, thetas) -> Report:
    """``mu(tau(theta)) = -4 pi grad psi(theta)`` (A = 4 pi I, C = 0)."""
    worst = 0.0
    thetas = np.atleast_2d(thetas)
    for th in thetas:
        mu = momentum_map(fact.target, fact.tau(th))
        worst = max(worst, numdiff.scaled_error(mu, -FOUR_PI * fact.family.potential.gradient(th)))
    return Report(f"momentum-gradient[{fact.name}]", {"gradient": (worst, 1e-10)}, len(thetas))


def check_compatible_potential(target: TargetGeometry, xs) -> Report:
    """``-grad psi`` lands in the momentum image, agrees with ``mu`` on the
    action chart, and ``Hess psi`` equals the action-induced metric."""
    pot = compatible_potential(target)
    image = target.momentum_image()
    outside = mu_err = h_err = 0.0
    xs = np.atleast_2d(xs)
    n = pot.dim
    for x in xs:
        y = -pot.gradient(x)
        outside += 0 if image.contains(y) else 1
        mu_err = max(mu_err, numdiff.scaled_error(momentum_map(target, action_chart(target, x)), y))
        H = np.array([[metric_from_action(target, x, e1, e2) for e2 in np.eye(n)] for e1 in np.eye(n)])
        h_err = max(h_err, numdiff.scaled_error(H, pot.hessian(x)))
    return Report(f"compatible-potential[{target.kind}]", {
        "image": (outside, 0.0),
        "momentum-chart": (mu_err, 1e-10),
        "action-metric": (h_err, 1e-8),
    }, len(xs))


def check_momentum_image_convex(target: TargetGeometry, factorization: ToricFactorization,
                                n_samples: int, seed: int = 0) -> Report:
    """Sample ``mu(tau(z))`` and random midpoints; count points outside the
    closed-form image (negative orthant or ``-(4 pi / c)`` open simplex)."""
    rng = np.random.default_rng(seed)
    if n_samples == 0:
        return Report("convexity-scan", {"violations": (0, 0)}, 0)
    zs = factorization.sample(rng, n_samples)
    mus = np.array([momentum_map(target, factorization.tau(z)) for z in zs])
    bad = sum(not _in_momentum_image(target, m) for m in mus)
    i = rng.integers(0, n_samples, size=n_samples)
    j = rng.integers(0, n_samples, size=n_samples)
    mids = 0.5 * (mus[i] + mus[j])
    bad += sum(not _in_momentum_image(target, m) for m in mids)
    return Report("convexity-scan", {"violations": (int(bad), 0)}, n_samples,
                  info={"momenta": mus})
