"""Lifts of affine isometric inclusions to the toric targets.

A lift of ``f: E -> E'`` is a map ``m: N -> N'`` with ``m o tau = tau' o f_*``
where ``f_*(z) = A z + B``. The torus homomorphism is stored at the Lie-algebra
level as an integer matrix ``rho`` (``m(Phi_t p) = Phi'_{rho t} m(p)``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import comb, gammaln

from . import numdiff
from .core import AffineMap, Report
from .errors import DimensionTooLarge, FactorizationMismatch, NoWitnessFound, UnsupportedTarget
from .families import (MAX_BINOMIAL_N, MAX_MULTINOMIAL_M, binomial, categorical,
                       inclusion_into_categorical, multinomial, product)
from .torification import ProjectiveSpace, ToricFactorization, make_factorization

LIFT_TOL = 1e-10
IMMERSION_TOL = 1e-4
GRID_POINTS = 7
MAX_VERONESE_DIM = 10_000


@dataclass(frozen=True)
class LiftMap:
    """Closed-form lift ``m`` of ``base`` between two toric factorizations.

    ``source_tau`` defaults to ``source_fact.tau``; the statement form of the
    Veronese map uses the swapped parametrisation instead.
    """

    name: str
    base: AffineMap
    source_fact: ToricFactorization
    target_fact: ToricFactorization
    m: Callable
    rho: np.ndarray
    source_tau: Callable | None = None
    alternate: "LiftMap | None" = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(np.rint(self.rho), dtype=int))
        if self.source_tau is None:
            object.__setattr__(self, "source_tau", self.source_fact.tau)

    def __call__(self, point) -> np.ndarray:
        return self.m(point)

    @property
    def source(self):
        return self.source_fact.target

    @property
    def target(self):
        return self.target_fact.target

    def lift_residual(self, z) -> float:
        """Projective distance between ``m(tau(z))`` and ``tau'(A z + B)``."""
        lhs = self.m(self.source_tau(z))
        rhs = self.target_fact.tau(self.base.on_tangent(z))
        return self.target.distance(lhs, rhs)


def _swap(w):
    w = np.asarray(w, dtype=complex)
    return w[::-1].copy()


def _veronese_coeffs(n):
    return np.sqrt(comb(n, np.arange(n + 1), exact=False))


def veronese_statement_map(n: int) -> Callable:
    """``[z1, z2] -> [z1^n, ..., C(n,k)^{1/2} z1^{n-k} z2^k, ..., z2^n]``."""
    ks = np.arange(n + 1)
    c = _veronese_coeffs(n)

    def m(w):
        z1, z2 = np.asarray(w, dtype=complex)
        return c * z1 ** (n - ks) * z2 ** ks

    return m


def veronese(n: int) -> LiftMap:
    """Veronese lift of Binomial(n) into the Categorical family on n + 1 outcomes.

    The returned map is ``m~([z1, z2]) = m([z2, z1])``, which satisfies the lift
    equation for the standard parametrisations; ``.alternate`` holds ``m``
    itself, a lift for the swapped source parametrisation.
    """
    if not 1 <= n <= MAX_BINOMIAL_N:
        raise ValueError(f"veronese degree must be in [1, {MAX_BINOMIAL_N}]")
    src = make_factorization(binomial(n))
    tgt = make_factorization(categorical(n))
    base = inclusion_into_categorical(src.family)
    base = AffineMap(base.A, base.B, src.family.space, tgt.family.space)
    m = veronese_statement_map(n)

    def m_tilde(w):
        return m(_swap(w))

    def tau_swapped(z):
        return _swap(src.tau(z))

    col = np.arange(n, 0, -1)[:, None]
    statement = LiftMap(f"veronese-statement({n})", base, src, tgt, m, col, source_tau=tau_swapped)
    return LiftMap(f"veronese({n})", base, src, tgt, m_tilde, -col, alternate=statement)


def veronese_multinomial(m_par: int, n: int) -> LiftMap:
    """n-th Veronese lift of Multinomial(m_par + 1, n) into the Categorical
    family over its outcomes (lexicographically descending)."""
    if m_par < 1 or n < 1:
        raise ValueError("veronese_multinomial needs m_par >= 1 and n >= 1")
    count = comb(m_par + n, m_par, exact=True)
    if count > MAX_VERONESE_DIM:
        raise DimensionTooLarge(f"{count} homogeneous coordinates exceed {MAX_VERONESE_DIM}")
    if m_par + 1 > MAX_MULTINOMIAL_M or n > MAX_BINOMIAL_N:
        raise DimensionTooLarge(f"Multinomial({m_par + 1}, {n}) is outside the catalog limits")
    src = make_factorization(multinomial(m_par + 1, n))
    tgt = make_factorization(categorical(count - 1))
    fam = src.family
    base = inclusion_into_categorical(fam)
    base = AffineMap(base.A, base.B, fam.space, tgt.family.space)
    K = np.array(fam.outcomes, dtype=float)
    c = np.exp(0.5 * (gammaln(n + 1.0) - gammaln(K + 1.0).sum(axis=1)))

    def m(w):
        w = np.asarray(w, dtype=complex)
        return c * np.prod(w[None, :] ** K, axis=1)

    return LiftMap(f"veronese-multinomial({m_par},{n})", base, src, tgt, m, K[:-1, :m_par])


def segre(n: int, m: int) -> LiftMap:
    """Segre lift of Categorical(n) x Categorical(m) into the Categorical family
    on the product space, ``([z], [w]) -> [z_i w_j]`` in lexicographic order."""
    if n < 1 or m < 1:
        raise ValueError("segre needs n, m >= 1")
    fam = product(categorical(n), categorical(m))
    src = make_factorization(fam)
    tgt = make_factorization(categorical((n + 1) * (m + 1) - 1))
    base = inclusion_into_categorical(fam)
    base = AffineMap(base.A, base.B, fam.space, tgt.family.space)

    def seg(p):
        p = np.asarray(p, dtype=complex)
        return np.outer(p[: n + 1], p[n + 1:]).ravel()

    return LiftMap(f"segre({n},{m})", base, src, tgt, seg, base.A)


def identity_lift(fact: ToricFactorization) -> LiftMap:
    space = fact.family.space
    return LiftMap(f"identity[{fact.name}]", AffineMap.identity(space), fact, fact,
                   lambda p: np.asarray(p, dtype=complex).copy(), np.eye(fact.dim))


def permutation_lift(dim: int, perm) -> LiftMap:
    """Relabelling of Categorical outcomes: ``p'(x_k) = p(x_{perm[k]})``.

    On natural parameters ``theta'_k = theta_{perm[k]} - theta_{perm[dim]}``
    (``theta_dim = 0``); on the target ``[z] -> [z_{perm[k]}]``.
    """
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(dim + 1)):
        raise ValueError(f"{perm.tolist()} is not a permutation of 0..{dim}")
    fact = make_factorization(categorical(dim))
    full = np.vstack((np.eye(dim), np.zeros((1, dim))))
    A = full[perm[:dim]] - full[perm[dim]]
    base = AffineMap(A, np.zeros(dim), fact.family.space, fact.family.space)
    return LiftMap(f"permutation{tuple(perm.tolist())}", base, fact, fact,
                   lambda p: np.asarray(p, dtype=complex)[perm], A)


def _same_factorization(a: ToricFactorization, b: ToricFactorization) -> bool:
    return a.name == b.name and a.family.label == b.family.label


def compose_lifts(l1: LiftMap, l2: LiftMap) -> LiftMap:
    """``l2 o l1``: base ``f2 o f1``, map ``m2 o m1``, ``rho = rho2 rho1``."""
    if not _same_factorization(l1.target_fact, l2.source_fact) or l2.source_tau is not l2.source_fact.tau:
        raise FactorizationMismatch(f"{l1.name} lands in {l1.target_fact.family.label}, "
                                    f"{l2.name} starts from {l2.source_fact.family.label}")
    m1, m2 = l1.m, l2.m
    return LiftMap(f"{l2.name}o{l1.name}", l1.base.then(l2.base), l1.source_fact, l2.target_fact,
                   lambda p: m2(m1(p)), l2.rho @ l1.rho, source_tau=l1.source_tau)


# ---------------------------------------------------------------------------
# checks


def _relative(w, target) -> np.ndarray:
    if not isinstance(target, ProjectiveSpace):
        raise UnsupportedTarget(f"rho extraction needs a projective target, got {target.kind}")
    w = np.asarray(w, dtype=complex)
    return w[:-1] / w[-1]


def extract_rho(lift: LiftMap, rng: np.random.Generator | None = None, step: float = 1e-3) -> np.ndarray:
    """Read ``rho`` off the phases of ``m(Phi_{s e_j} p) / m(p)`` (target chart
    normalised by the last homogeneous coordinate)."""
    rng = np.random.default_rng(0) if rng is None else rng
    p = lift.source_tau(lift.source_fact.sample(rng, 1)[0])
    base = _relative(lift.m(p), lift.target)
    cols = []
    for e in np.eye(lift.source.torus_dim):
        moved = _relative(lift.m(lift.source.act(step * e, p)), lift.target)
        cols.append(np.angle(moved / base) / (2 * np.pi * step))
    return np.rint(np.stack(cols, axis=1)).astype(int)


def check_lift(lift: LiftMap, n_samples: int = 100, seed: int = 0, n_points: int = 3) -> Report:
    """Lift equation at random ``z``, torus equivariance on a 7-point grid per
    axis, ``rho`` against its numerical extraction, and finite kernel of rho."""
    rng = np.random.default_rng(seed)
    zs = lift.source_fact.sample(rng, n_samples)
    lift_err = max((lift.lift_residual(z) for z in zs), default=0.0)
    S, T = lift.source, lift.target
    n = S.torus_dim
    grid = np.arange(GRID_POINTS) / GRID_POINTS
    eq = 0.0
    for z in zs[:n_points]:
        p = lift.source_tau(z)
        mp = lift.m(p)
        for t in itertools.product(grid, repeat=n):
            t = np.array(t)
            eq = max(eq, T.distance(lift.m(S.act(t, p)), T.act(lift.rho @ t, mp)))
    extracted = extract_rho(lift, rng)
    rank_def = n - np.linalg.matrix_rank(lift.rho)
    return Report(f"lift[{lift.name}]", {
        "lift-equation": (lift_err, LIFT_TOL),
        "equivariance": (eq, LIFT_TOL),
        "rho-extraction": (float(np.max(np.abs(extracted - lift.rho))), 0),
        "rho-rank-deficit": (int(rank_def), 0),
    }, len(zs), info={"rho": lift.rho.tolist(), "extracted_rho": extracted.tolist()})


def verify_kahler_immersion(lift: LiftMap, samples, m: Callable | None = None) -> Report:
    """Chart level ``A^T H'(A theta + B) A = H(theta)`` and target level
    ``(m o tau)^* g' = tau^* g`` by finite-difference Jacobians.

    ``samples`` are points ``z`` of the source tangent bundle; ``m`` overrides
    the lift map (used to show that a distorted map is rejected).
    """
    m = lift.m if m is None else m
    base = lift.base
    S, T = lift.source, lift.target
    zs = np.atleast_2d(np.asarray(samples, dtype=complex))
    n = base.source.dim
    chart = target = 0.0
    for z in zs:
        th = z.real
        pulled = base.A.T @ base.target.metric(base(th)) @ base.A
        chart = max(chart, numdiff.scaled_error(pulled, base.source.metric(th)))

        def tau_real(v):
            return lift.source_tau(v[:n] + 1j * v[n:])

        v0 = np.concatenate((z.real, z.imag))
        p = tau_real(v0)
        Ds = numdiff.jacobian(tau_real, v0)
        Dt = numdiff.jacobian(lambda v: m(tau_real(v)), v0)
        mp = m(p)
        Gs = np.array([[S.metric(p, Ds[:, a], Ds[:, b]) for b in range(2 * n)] for a in range(2 * n)])
        Gt = np.array([[T.metric(mp, Dt[:, a], Dt[:, b]) for b in range(2 * n)] for a in range(2 * n)])
        target = max(target, numdiff.scaled_error(Gt, Gs))
    return Report(f"kahler-immersion[{lift.name}]", {
        "chart-isometry": (chart, IMMERSION_TOL),
        "target-isometry": (target, IMMERSION_TOL),
    }, len(zs))


# ---------------------------------------------------------------------------
# conjugacy search


@dataclass(frozen=True)
class ConjugacyWitness:
    """``m2 o G1 = G2 o m1`` with ``G1 = Phi_t o P1`` and ``G2 = diag(phases) o P2``."""

    source_perm: tuple
    source_shift: tuple
    target_perm: tuple
    target_phases: tuple
    residual: float

    def describe(self) -> dict:
        return {
            "source_perm": list(self.source_perm),
            "source_shift": list(self.source_shift),
            "target_perm": list(self.target_perm),
            "target_phases": [[float(np.real(c)), float(np.imag(c))] for c in self.target_phases],
            "residual": self.residual,
        }


def _source_perms(dim: int):
    if dim <= 4:
        return list(itertools.permutations(range(dim)))
    return [tuple(range(dim)), tuple(range(dim - 1, -1, -1))]


def find_conjugacies(l1: LiftMap, l2: LiftMap, n_points: int = 5, seed: int = 0,
                     tol: float = LIFT_TOL) -> list:
    """All witnesses found, one per ``(P1, P2)`` pair, identity target first.

    Target candidates are the identity and the index reversal combined with
    diagonal phases solved from the first sample point.
    """
    S, T = l1.source, l1.target
    if S.ambient_dim != l2.source.ambient_dim or T.ambient_dim != l2.target.ambient_dim:
        raise FactorizationMismatch("lifts do not share source and target spaces")
    rng = np.random.default_rng(seed)
    ps = [l1.source_tau(z) for z in l1.source_fact.sample(rng, n_points)]
    d = T.ambient_dim
    grid = np.arange(GRID_POINTS) / GRID_POINTS
    shifts = list(itertools.product(grid, repeat=S.torus_dim)) if S.torus_dim <= 3 else [(0.0,) * S.torus_dim]
    found = []
    for tperm in (tuple(range(d)), tuple(range(d - 1, -1, -1))):
        for sperm in _source_perms(S.ambient_dim):
            for t in shifts:
                def G1(p):
                    return S.act(np.array(t), np.asarray(p)[list(sperm)])

                a = l2.m(G1(ps[0]))
                b = l1.m(ps[0])[list(tperm)]
                if np.any(np.abs(b) < 1e-300):
                    continue
                ratio = a / b
                ratio = ratio / ratio[-1]
                if np.max(np.abs(np.abs(ratio) - 1)) > 1e-8:
                    continue
                res = max(T.distance(l2.m(G1(p)), ratio * l1.m(p)[list(tperm)]) for p in ps)
                if res <= tol:
                    found.append(ConjugacyWitness(sperm, tuple(float(x) for x in t), tperm,
                                                  tuple(ratio), float(res)))
                    break
    return found


def conjugacy_check(l1: LiftMap, l2: LiftMap, n_points: int = 5, seed: int = 0) -> Report:
    """Search for ``G1, G2`` with ``m2 o G1 = G2 o m1``; a failed search is
    reported, not raised."""
    try:
        found = find_conjugacies(l1, l2, n_points, seed)
        if not found:
            raise NoWitnessFound(f"no witness for {l1.name} ~ {l2.name} on the search grid")
        err = None
    except NoWitnessFound as exc:
        found, err = [], str(exc)
    rng = np.random.default_rng(seed)
    lift_res = max(l.lift_residual(z) for l in (l1, l2) for z in l1.source_fact.sample(rng, n_points))
    best = min((w.residual for w in found), default=np.inf)
    return Report(f"conjugacy[{l1.name}~{l2.name}]", {
        "witness-residual": (best, LIFT_TOL),
        "lift-equation": (lift_res, LIFT_TOL),
    }, n_points, info={"witnesses": [w.describe() for w in found], "error": err})


def rescaled(lift: LiftMap, weights) -> Callable:
    """``m`` followed by a non-unitary diagonal rescaling of the target coordinates."""
    w = np.asarray(weights, dtype=float)
    return lambda p: w * lift.m(p)


SHIPPED = {
    "veronese": veronese,
    "veronese-multinomial": veronese_multinomial,
    "segre": segre,
}


def make_lift(name: str, **params) -> LiftMap:
    """Build a shipped lift by name with integer parameters."""
    if name == "veronese":
        return veronese(int(params.get("n", 2)))
    if name == "veronese-multinomial":
        return veronese_multinomial(int(params.get("m", 2)), int(params.get("n", 2)))
    if name == "segre":
        return segre(int(params.get("n", 1)), int(params.get("m", 1)))
    raise KeyError(f"unknown lift {name!r}; known: {', '.join(SHIPPED)}")
