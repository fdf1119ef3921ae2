"""Hessian potentials, Legendre duality and chart-level dually flat structure.

Everything here works in a single global affine chart ``x`` on an open convex
domain of R^n. A dually flat structure is then entirely determined by a
strictly convex potential ``psi``: the metric is ``Hess psi``, the dual affine
coordinates are ``y = grad psi`` and the dual potential is the Legendre
transform of ``psi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from . import numdiff
from .errors import DomainViolation, NotInDualDomain, SingularHessian

FOUR_PI = 4.0 * np.pi

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 100
COND_LIMIT = 1e12
PD_FLOOR = 1e-12
SAMPLE_MARGIN = 1e-3


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Domain:
    """Open convex domain: a product of open intervals or a scaled open simplex.

    ``kind`` is one of ``"reals"``, ``"negative-orthant"``, ``"halfline"``,
    ``"box"`` or ``"simplex"``. The first four are all interval products and
    are described by ``lower``/``upper`` (infinite bounds allowed). The simplex
    is ``{scale * s : s_k > 0, sum s_k < 1}``; ``scale`` may be negative.
    """

    kind: str
    dim: int
    lower: tuple = ()
    upper: tuple = ()
    scale: float = 1.0

    @classmethod
    def reals(cls, n: int) -> "Domain":
        return cls("reals", n, (-np.inf,) * n, (np.inf,) * n)

    @classmethod
    def negative_orthant(cls, n: int) -> "Domain":
        return cls("negative-orthant", n, (-np.inf,) * n, (0.0,) * n)

    @classmethod
    def halfline(cls, bound: float = 0.0, above: bool = True) -> "Domain":
        if above:
            return cls("halfline", 1, (bound,), (np.inf,))
        return cls("halfline", 1, (-np.inf,), (bound,))

    @classmethod
    def box(cls, lower, upper) -> "Domain":
        lower = tuple(float(v) for v in np.atleast_1d(lower))
        upper = tuple(float(v) for v in np.atleast_1d(upper))
        if len(lower) != len(upper) or any(a >= b for a, b in zip(lower, upper)):
            raise ValueError("box needs lower < upper componentwise")
        return cls("box", len(lower), lower, upper)

    @classmethod
    def simplex(cls, n: int, scale: float = 1.0) -> "Domain":
        if scale == 0:
            raise ValueError("simplex scale must be nonzero")
        return cls("simplex", n, scale=float(scale))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        if self.kind == "simplex":
            s = x / self.scale
            return bool(np.all(s > 0) and s.sum() < 1)
        return bool(np.all(x > np.asarray(self.lower)) and np.all(x < np.asarray(self.upper)))

    def centroid(self) -> np.ndarray:
        if self.kind == "simplex":
            return np.full(self.dim, self.scale / (self.dim + 1))
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        c = np.zeros(self.dim)
        for i in range(self.dim):
            if np.isfinite(lo[i]) and np.isfinite(hi[i]):
                c[i] = 0.5 * (lo[i] + hi[i])
            elif np.isfinite(lo[i]):
                c[i] = lo[i] + 1.0
            elif np.isfinite(hi[i]):
                c[i] = hi[i] - 1.0
        return c

    def sample(self, rng: np.random.Generator, k: int, lo=-2.0, hi=2.0,
               margin: float = SAMPLE_MARGIN) -> np.ndarray:
        """Draw ``k`` points, at least ``margin`` inside the domain.

        Unbounded directions are clipped to the window ``[lo, hi]``.
        """
        if self.kind == "simplex":
            w = rng.dirichlet(np.ones(self.dim + 1), size=k)[:, : self.dim]
            w = margin + (1 - (self.dim + 1) * margin) * w
            return self.scale * w
        a = np.maximum(np.asarray(self.lower) + margin, np.broadcast_to(lo, (self.dim,)))
        b = np.minimum(np.asarray(self.upper) - margin, np.broadcast_to(hi, (self.dim,)))
        if np.any(a >= b):
            raise ValueError("sampling window does not meet the domain")
        return rng.uniform(a, b, size=(k, self.dim))

    def describe(self) -> dict:
        if self.kind == "simplex":
            return {"kind": self.kind, "dim": self.dim, "scale": self.scale}
        return {"kind": self.kind, "dim": self.dim,
                "lower": [float(v) for v in self.lower],
                "upper": [float(v) for v in self.upper]}


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Potential:
    """Strictly convex function with closed-form gradient and Hessian."""

    name: str
    dim: int
    domain: Domain
    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    sample_window: tuple = (-2.0, 2.0)
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> float:
        return float(self.f(self._check(x)))

    def gradient(self, x) -> np.ndarray:
        return np.asarray(self.grad(self._check(x)), dtype=float)

    def hessian(self, x) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.hess(self._check(x)), dtype=float))

    def _check(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not self.domain.contains(x):
            raise DomainViolation(f"{self.name}: {x} outside {self.domain.kind} domain")
        return x

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        lo, hi = self.sample_window
        return self.domain.sample(rng, k, lo, hi)


def is_positive_definite(H: np.ndarray, floor: float = PD_FLOOR) -> bool:
    """Cholesky succeeds and every pivot exceeds ``floor``."""
    H = np.atleast_2d(H)
    if not np.array_equal(H, H.T):
        H = 0.5 * (H + H.T)
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.diag(L) ** 2 > floor))


def check_potential(p: Potential, samples) -> "Report":
    """Symmetry, positive definiteness, and closed-form vs FD derivatives."""
    sym = pd_fail = g_err = h_err = 0.0
    samples = np.atleast_2d(samples)
    for x in samples:
        H = p.hessian(x)
        sym = max(sym, float(np.max(np.abs(H - H.T))))
        if not is_positive_definite(H):
            pd_fail += 1
        g_err = max(g_err, numdiff.scaled_error(numdiff.gradient(p, x), p.gradient(x)))
        h_err = max(h_err, numdiff.scaled_error(numdiff.hessian(p, x), H))
    return Report(f"potential[{p.name}]", {
        "symmetry": (sym, 0.0),
        "positive-definite": (pd_fail, 0.0),
        "gradient-fd": (g_err, 1e-5),
        "hessian-fd": (h_err, 1e-4),
    }, len(samples))


def quadratic_potential(n: int = 1) -> Potential:
    """``sum x_k^2 / 2`` on R^n; self-dual."""
    return Potential(
        "quadratic", n, Domain.reals(n),
        lambda x: 0.5 * float(x @ x),
        lambda x: x.copy(),
        lambda x: np.eye(n),
        params={"n": n},
    )


def exp_potential(n: int = 1) -> Potential:
    """``sum exp(x_k)`` on R^n (the Poisson cumulant when n = 1)."""
    return Potential(
        "exp", n, Domain.reals(n),
        lambda x: float(np.exp(x).sum()),
        np.exp,
        lambda x: np.diag(np.exp(x)),
        params={"n": n},
    )


def flat_cn_potential(n: int = 1) -> Potential:
    """Potential ``(1/4) sum exp(4 pi x_k)`` compatible with the flat C^n action."""
    return Potential(
        "flat-cn", n, Domain.reals(n),
        lambda x: 0.25 * float(np.exp(FOUR_PI * x).sum()),
        lambda x: np.pi * np.exp(FOUR_PI * x),
        lambda x: np.diag(4 * np.pi**2 * np.exp(FOUR_PI * x)),
        sample_window=(-0.3, 0.3),
        params={"n": n},
    )


def projective_potential(n: int = 1, c: float = 1.0) -> Potential:
    """``(1/c) ln(1 + sum exp(4 pi x_k))``, the P_n(c) potential."""
    if c <= 0:
        raise ValueError("projective potential needs c > 0")

    def f(x):
        return float(logsumexp(np.concatenate(([0.0], FOUR_PI * x)))) / c

    def softmax(x):
        a = np.concatenate(([0.0], FOUR_PI * x))
        w = np.exp(a - logsumexp(a))
        return w[1:]

    def grad(x):
        return FOUR_PI / c * softmax(x)

    def hess(x):
        s = softmax(x)
        return FOUR_PI**2 / c * (np.diag(s) - np.outer(s, s))

    return Potential("projective", n, Domain.reals(n), f, grad, hess,
                     sample_window=(-0.3, 0.3), params={"n": n, "c": c})


POTENTIALS = {
    "quadratic": quadratic_potential,
    "exp": exp_potential,
    "flat-cn": flat_cn_potential,
    "projective": projective_potential,
}


def make_potential(name: str, n: int = 1, c: float = 1.0) -> Potential:
    """Cataloged potential by name; ``c`` is used by ``projective`` only."""
    try:
        ctor = POTENTIALS[name]
    except KeyError:
        raise KeyError(f"unknown potential {name!r}; known: {', '.join(POTENTIALS)}") from None
    return ctor(int(n), float(c)) if name == "projective" else ctor(int(n))


def flat_cn_dual(x) -> float:
    """Closed-form dual of the flat C^n potential on the negative orthant."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(-np.sum(x * np.log(-x / np.pi) - x) / FOUR_PI)


def projective_dual(x, c: float = 1.0) -> float:
    """Closed-form dual ``phi_c`` of ``psi_c`` on ``-(4 pi / c) S_n``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = FOUR_PI / c
    s = a + x.sum()
    return float(-np.sum(x * np.log(-x)) / FOUR_PI + s * np.log(s) / FOUR_PI - np.log(a) / c)


# ---------------------------------------------------------------------------
# Legendre transform


def invert_gradient(p: Potential, y, x0=None, tol: float = NEWTON_TOL,
                    max_iter: int = NEWTON_MAX_ITER) -> np.ndarray:
    """Solve ``grad psi(x) = y`` by damped Newton with backtracking.

    The step is halved until the iterate stays in the domain and the residual
    norm decreases. Convergence is declared when
    ``|grad psi(x) - y| <= tol * max(1, |y|)``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x = p.domain.centroid() if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    if not p.domain.contains(x):
        raise DomainViolation("Newton seed outside the domain")
    scale = max(1.0, float(np.linalg.norm(y)))
    r = p.grad(x) - y
    res = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if res <= tol * scale:
            return x
        H = np.atleast_2d(p.hess(x))
        hn = float(np.max(np.abs(H)))
        if hn == 0.0 or not np.isfinite(hn):
            # curvature underflow: the iterate is running off to infinity
            raise NotInDualDomain(f"{p.name}: Newton diverged from {y}")
        if np.linalg.cond(H) > COND_LIMIT:
            raise SingularHessian(f"Hessian condition number exceeds {COND_LIMIT:g}")
        step = np.linalg.solve(H, r)
        t = 1.0
        while True:
            xn = x - t * step
            if p.domain.contains(xn):
                rn = p.grad(xn) - y
                resn = float(np.linalg.norm(rn))
                if np.isfinite(resn) and resn < res:
                    break
            t *= 0.5
            if t < 1e-14:
                raise NotInDualDomain(f"{p.name}: Newton stalled at residual {res:.3e}")
        x, r, res = xn, rn, resn
    if res <= tol * scale:
        return x
    raise NotInDualDomain(f"{p.name}: no convergence in {max_iter} iterations")


def legendre_dual(p: Potential, x_star) -> float:
    """Legendre transform ``psi*(x*) = <x*, g^-1(x*)> - psi(g^-1(x*))``, g = grad psi."""
    x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
    known = _known_dual_domain(p)
    if known is not None and not known.contains(x_star):
        raise NotInDualDomain(f"{x_star} is outside the gradient image of {p.name}")
    x = invert_gradient(p, x_star)
    return float(x_star @ x - p.f(x))


@dataclass(frozen=True)
class LegendrePair:
    """A potential together with its (numerically evaluated) Legendre dual."""

    primal: Potential
    dual_domain: Domain

    def dual_eval(self, x_star) -> float:
        return legendre_dual(self.primal, x_star)

    def dual_grad(self, x_star) -> np.ndarray:
        return invert_gradient(self.primal, x_star)

    def as_potential(self) -> Potential:
        """The dual as a Potential of its own, so it can be transformed again."""
        p = self.primal
        lo = float(np.min(p.gradient(np.full(p.dim, p.sample_window[0]))))
        hi = float(np.max(p.gradient(np.full(p.dim, p.sample_window[1]))))
        return Potential(
            f"{p.name}*", p.dim, self.dual_domain,
            self.dual_eval, self.dual_grad,
            lambda ys: np.linalg.inv(p.hessian(invert_gradient(p, ys))),
            sample_window=(lo, hi),
        )


def _known_dual_domain(p: Potential) -> Domain | None:
    n = p.dim
    if p.name == "quadratic":
        return Domain.reals(n)
    if p.name in ("exp", "flat-cn"):
        return Domain.box([0.0] * n, [np.inf] * n) if n > 1 else Domain.halfline(0.0)
    if p.name == "projective":
        return Domain.simplex(n, FOUR_PI / p.params["c"])
    return None


def legendre_pair(p: Potential) -> LegendrePair:
    """Pair a cataloged potential with the known image of its gradient."""
    dom = _known_dual_domain(p)
    if dom is None:
        raise ValueError(f"no known dual domain for potential {p.name!r}")
    return LegendrePair(p, dom)


def check_legendre(pair: LegendrePair, samples) -> "Report":
    """grad(h*) o grad(h) = id by differentiating the numerical transform,
    and the Fenchel equality psi(x) + psi*(y) - <x, y> = 0 at y = grad psi(x)."""
    p = pair.primal
    inv_err = fenchel = 0.0
    samples = np.atleast_2d(samples)
    for x in samples:
        y = p.gradient(x)
        g_star = numdiff.gradient(pair.dual_eval, y, rel=1e-4, order=4)
        inv_err = max(inv_err, numdiff.scaled_error(g_star, x))
        fenchel = max(fenchel, abs(p(x) + pair.dual_eval(y) - float(x @ y)))
    return Report(f"legendre[{p.name}]", {
        "inverse-gradient": (inv_err, 1e-8),
        "fenchel": (fenchel, 1e-8),
    }, len(samples))


def check_involution(pair: LegendrePair, samples) -> "Report":
    """Transform twice and compare with the original potential and gradient."""
    p = pair.primal
    dual = pair.as_potential()
    bidual = LegendrePair(dual, p.domain)
    val = grad_err = 0.0
    samples = np.atleast_2d(samples)
    for x in samples:
        val = max(val, abs(bidual.dual_eval(x) - p(x)) / max(1.0, abs(p(x))))
        grad_err = max(grad_err, numdiff.scaled_error(bidual.dual_grad(x), p.gradient(x)))
    return Report(f"involution[{p.name}]", {
        "value": (val, 1e-8),
        "gradient": (grad_err, 1e-8),
    }, len(samples))


# ---------------------------------------------------------------------------
# dually flat chart


@dataclass(frozen=True)
class DuallyFlatSpace:
    """Chart-level dually flat structure ``(h, nabla, nabla*)`` from a potential.

    ``nabla`` is the flat connection of the affine chart (Christoffels vanish);
    ``nabla*`` is its dual with respect to ``h = Hess psi``.
    """

    potential: Potential

    @property
    def dim(self) -> int:
        return self.potential.dim

    def metric(self, x) -> np.ndarray:
        return self.potential.hessian(x)

    def inverse_metric(self, x) -> np.ndarray:
        H = self.metric(x)
        L = np.linalg.cholesky(H)
        Linv = np.linalg.solve(L, np.eye(self.dim))
        return Linv.T @ Linv

    def dual_coords(self, x) -> np.ndarray:
        return self.potential.gradient(x)

    def dual_christoffel(self, x) -> np.ndarray:
        """``G[k, i, j] = Gamma*^k_ij = h^{kl} d_i h_{jl}`` (FD of the metric)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = self.dim
        dh = numdiff.jacobian(lambda u: self.metric(u).ravel(), x).reshape(n, n, n)
        # dh[j, l, i] = d_i h_jl
        lowered = np.transpose(dh, (2, 0, 1))  # [i, j, l]
        return np.einsum("kl,ijl->kij", self.inverse_metric(x), lowered)

    def dual_potential(self, x) -> float:
        """Dual potential ``phi`` at the point with affine coordinates ``x``,
        evaluated as the numerical Legendre transform at ``y = grad psi(x)``."""
        return legendre_dual(self.potential, self.dual_coords(x))


def dual_potential_phi(space: DuallyFlatSpace, x) -> float:
    """``phi(x) = -<x, u> - psi(u)`` with ``u = (-grad psi)^-1(x)``; equals psi*(-x)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = invert_gradient(space.potential, -x)
    return float(-x @ u - space.potential.f(u))


def check_dual_flatness(space: DuallyFlatSpace, samples) -> "Report":
    """Dual-connection torsion symmetry ``Gamma*^k_ij = Gamma*^k_ji``."""
    worst = 0.0
    samples = np.atleast_2d(samples)
    for x in samples:
        G = space.dual_christoffel(x)
        scale = max(1.0, float(np.max(np.abs(G))))
        worst = max(worst, float(np.max(np.abs(G - np.transpose(G, (0, 2, 1))))) / scale)
    return Report("dual-flatness", {"torsion": (worst, 1e-6)}, len(samples))


def check_dual_structure(space: DuallyFlatSpace, samples) -> "Report":
    """Inverse metric, dual coordinates, Kronecker pairing and potential constancy."""
    samples = np.atleast_2d(samples)
    inv = pair = dy = 0.0
    consts = []
    I = np.eye(space.dim)
    for x in samples:
        H = space.metric(x)
        Hi = space.inverse_metric(x)
        inv = max(inv, float(np.max(np.abs(H @ Hi - I))))
        # h(d/dx_i, d/dy_j): d/dy_j = sum_k h^{jk} d/dx_k
        pair = max(pair, float(np.max(np.abs(np.einsum("ik,jk->ij", H, Hi) - I))))
        dy = max(dy, numdiff.scaled_error(numdiff.jacobian(space.dual_coords, x), H))
        y = space.dual_coords(x)
        consts.append(space.potential(x) + space.dual_potential(x) - float(x @ y))
    spread = float(np.ptp(consts)) if consts else 0.0
    return Report("dual-structure", {
        "inverse-metric": (inv, 1e-10),
        "kronecker-pairing": (pair, 1e-10),
        "dual-coordinates-fd": (dy, 1e-5),
        "potential-constancy": (spread, 1e-8),
    }, len(samples))


# ---------------------------------------------------------------------------
# affine maps


@dataclass(frozen=True)
class AffineMap:
    """``x -> A x + B`` between the affine charts of two dually flat spaces."""

    A: np.ndarray
    B: np.ndarray
    source: DuallyFlatSpace
    target: DuallyFlatSpace

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_1d(np.asarray(self.B, dtype=float))
        if A.shape != (self.target.dim, self.source.dim) or B.shape != (self.target.dim,):
            raise ValueError(f"affine map shape {A.shape}/{B.shape} does not match "
                             f"{self.source.dim} -> {self.target.dim}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    def __call__(self, x) -> np.ndarray:
        return self.A @ np.atleast_1d(np.asarray(x, dtype=float)) + self.B

    def on_tangent(self, z) -> np.ndarray:
        """The derivative map on TM = C^n: ``z -> A z + B``."""
        return self.A @ np.atleast_1d(np.asarray(z, dtype=complex)) + self.B

    def then(self, other: "AffineMap") -> "AffineMap":
        """``other o self``."""
        return AffineMap(other.A @ self.A, other.A @ self.B + other.B, self.source, other.target)

    @classmethod
    def identity(cls, space: DuallyFlatSpace) -> "AffineMap":
        return cls(np.eye(space.dim), np.zeros(space.dim), space, space)


def pushforward_metric_check(f: AffineMap, samples) -> "Report":
    """Isometry ``A^T H'(Ax+B) A = H(x)`` and the chain rule
    ``Hess(psi' o f) = A^T Hess(psi')(f(x)) A`` (the latter by FD)."""
    samples = np.atleast_2d(samples)
    iso = chain = 0.0
    tgt = f.target.potential
    for x in samples:
        fx = f(x)
        if not tgt.domain.contains(fx):
            raise DomainViolation(f"image {fx} outside the target domain")
        pulled = f.A.T @ f.target.metric(fx) @ f.A
        iso = max(iso, numdiff.scaled_error(pulled, f.source.metric(x)))
        chain = max(chain, numdiff.scaled_error(numdiff.hessian(lambda u: tgt(f(u)), x), pulled))
    return Report("pushforward-metric", {
        "isometry": (iso, 1e-8),
        "chain-rule-fd": (chain, 1e-4),
    }, len(samples))


# ---------------------------------------------------------------------------
# reports


@dataclass
class Report:
    """Outcome of a numerical check: per-aspect (max violation, tolerance)."""

    name: str
    results: dict
    n_samples: int
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v <= t for v, t in self.results.values())

    def violation(self, aspect: str | None = None) -> float:
        if aspect is None:
            return max((v for v, _ in self.results.values()), default=0.0)
        return self.results[aspect][0]

    def tolerance(self, aspect: str) -> float:
        return self.results[aspect][1]

    def __str__(self) -> str:
        parts = [f"{k}={v:.3g}/{t:.0e}" for k, (v, t) in self.results.items()]
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({', '.join(parts)})"
