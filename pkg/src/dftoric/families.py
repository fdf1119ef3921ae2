"""Exponential families on finite and countable sample spaces.

A family is ``p(x; theta) = exp(C(x) + <F(x), theta> - psi(theta))``. The
catalog covers Poisson, Categorical, Binomial, Multinomial, Negative Binomial
and the normal family with unit variance (kept only as the non-toric
counterexample; it is integrated by Gauss-Hermite quadrature).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln, logsumexp

from . import numdiff
from .core import AffineMap, Domain, DuallyFlatSpace, Potential, Report
from .errors import (InfiniteSampleSpace, OutcomeNotInSpace, ThetaOutOfDomain,
                     TruncationNotConverged)

MAX_BINOMIAL_N = 30
MAX_MULTINOMIAL_M = 6
MIN_TRUNCATION = 200
TAIL_TARGET = 1e-12
_MAX_TRUNCATION = 1 << 20
_HERMITE_NODES = 80


@dataclass(frozen=True)
class ExponentialFamily:
    """Exponential family with natural parameters ``theta``.

    For finite families ``outcomes`` lists the sample space in its fixed
    order and ``C_values``/``F_values`` hold ``C`` and ``F`` on it. Countable
    families (``kind == "countable"``) live on ``{0, 1, 2, ...}`` and compute
    ``C``/``F`` from the vectorised callables ``C_fn``/``F_fn``.
    """

    name: str
    params: dict
    potential: Potential
    kind: str
    outcomes: tuple = ()
    C_values: np.ndarray | None = None
    F_values: np.ndarray | None = None
    C_fn: Callable | None = None
    F_fn: Callable | None = None
    toric: bool = True
    psi_text: str = ""
    components: tuple = field(default=(), repr=False)

    @property
    def dim(self) -> int:
        return self.potential.dim

    @property
    def space(self) -> DuallyFlatSpace:
        return DuallyFlatSpace(self.potential)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        args = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.name}({args})"

    def describe(self) -> dict:
        return {
            "name": self.name,
            "parameters": dict(self.params),
            "dim": self.dim,
            "domain": self.potential.domain.describe(),
            "psi": self.psi_text,
            "sample_space": self.kind,
            "toric": self.toric,
        }

    # -- sample space -------------------------------------------------------

    def _theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if not self.potential.domain.contains(theta):
            raise ThetaOutOfDomain(f"{self.label}: theta={theta} outside the natural domain")
        return theta

    def _cf(self, ks: np.ndarray):
        return np.asarray(self.C_fn(ks), dtype=float), np.atleast_2d(
            np.asarray(self.F_fn(ks), dtype=float).reshape(len(ks), self.dim))

    def truncation(self, theta, tail: float = TAIL_TARGET) -> int:
        """Cutoff K such that the mass of ``{k >= K}`` is below ``tail``.

        The pmf ratio ``p(k+1)/p(k)`` of the countable families is eventually
        decreasing, so once it drops below one the tail is bounded by a
        geometric series.
        """
        if self.kind != "countable":
            raise InfiniteSampleSpace(f"{self.label} has no truncation")
        theta = self._theta(theta)
        K = MIN_TRUNCATION
        while K <= _MAX_TRUNCATION:
            ks = np.arange(K + 1)
            C, F = self._cf(ks)
            logp = C + F @ theta - self.potential.f(theta)
            ratio = np.exp(logp[-1] - logp[-2])
            if ratio < 1:
                bound = np.exp(logp[-1]) / (1 - ratio)
                if bound < tail:
                    return K
            K *= 2
        raise TruncationNotConverged(f"{self.label}: tail above {tail:g} at K={_MAX_TRUNCATION}")

    def support(self, theta=None):
        """Outcomes, C and F on the (truncated) sample space."""
        if self.kind == "finite":
            return list(self.outcomes), self.C_values, self.F_values
        if self.kind == "countable":
            if theta is None:
                raise InfiniteSampleSpace("countable support needs theta for truncation")
            ks = np.arange(self.truncation(theta))
            C, F = self._cf(ks)
            return list(ks), C, F
        raise InfiniteSampleSpace(f"{self.label} has a continuous sample space")

    def _index(self, outcome) -> int:
        try:
            return self.outcomes.index(outcome)
        except ValueError:
            raise OutcomeNotInSpace(f"{outcome!r} not in the sample space of {self.label}") from None

    # -- evaluation ---------------------------------------------------------

    def log_probability(self, outcome, theta) -> float:
        theta = self._theta(theta)
        if self.kind == "finite":
            i = self._index(outcome)
            C, F = self.C_values[i], self.F_values[i]
        elif self.kind == "countable":
            if not (isinstance(outcome, (int, np.integer)) and outcome >= 0):
                raise OutcomeNotInSpace(f"{outcome!r} is not a natural number")
            C, F = self._cf(np.array([outcome]))
            C, F = C[0], F[0]
        else:
            x = float(outcome)
            C, F = self.C_fn(np.array([x]))[0], np.array([x])
        return float(C + F @ theta - self.potential.f(theta))

    def probability(self, outcome, theta) -> float:
        """``exp(C(x) + <F(x), theta> - psi(theta))`` (a density for the normal family)."""
        return float(np.exp(self.log_probability(outcome, theta)))

    def probabilities(self, theta) -> np.ndarray:
        """Probabilities over ``support(theta)`` in order."""
        theta = self._theta(theta)
        _, C, F = self.support(theta)
        return np.exp(C + F @ theta - self.potential.f(theta))

    def _masses(self, theta):
        """Nodes of F with their probability masses; quadrature for the normal family."""
        if self.kind == "continuous":
            u, w = np.polynomial.hermite_e.hermegauss(_HERMITE_NODES)
            x = theta[0] + u
            return x[:, None], w / np.sqrt(2 * np.pi)
        _, C, F = self.support(theta)
        return F, np.exp(C + F @ theta - self.potential.f(theta))

    def log_partition(self, theta) -> float:
        """``ln sum_x exp(C(x) + <F(x), theta>)`` computed from the sample space."""
        theta = self._theta(theta)
        if self.kind == "continuous":
            u, w = np.polynomial.hermite_e.hermegauss(_HERMITE_NODES)
            # integral of exp(-x^2/2 + theta x) / sqrt(2 pi)
            return float(logsumexp(theta[0] * u, b=w / np.sqrt(2 * np.pi)))
        _, C, F = self.support(theta)
        return float(logsumexp(C + F @ theta))

    def total_mass(self, theta) -> float:
        theta = self._theta(theta)
        return float(self._masses(theta)[1].sum())

    def theta_from_probabilities(self, probs, outcomes=None) -> np.ndarray:
        """Invert the parametrisation from probabilities on (a prefix of) the support.

        Uses ``ln p(x_i) - ln p(x_ref) = C_i - C_ref + <F_i - F_ref, theta>``
        with the last listed outcome as reference.
        """
        probs = np.asarray(probs, dtype=float)
        if self.kind == "finite":
            idx = list(range(len(self.outcomes))) if outcomes is None else [self._index(o) for o in outcomes]
            C, F = self.C_values[idx], self.F_values[idx]
        elif self.kind == "countable":
            ks = np.arange(len(probs)) if outcomes is None else np.asarray(outcomes)
            C, F = self._cf(ks)
        else:
            raise InfiniteSampleSpace("continuous families are not inverted from probabilities")
        lhs = np.log(probs[:-1]) - np.log(probs[-1]) - (C[:-1] - C[-1])
        A = F[:-1] - F[-1]
        theta, *_ = np.linalg.lstsq(A, lhs, rcond=None)
        return theta


# ---------------------------------------------------------------------------
# Fisher metric


def fisher_metric_expectation(fam: ExponentialFamily, theta) -> np.ndarray:
    """``sum_x (F_i - d_i psi)(F_j - d_j psi) p(x; theta)``."""
    theta = fam._theta(theta)
    F, mass = fam._masses(theta)
    if fam.kind == "countable" and abs(1 - mass.sum()) > 1e-10:
        raise TruncationNotConverged(f"{fam.label}: missing mass {1 - mass.sum():.2e}")
    D = F - fam.potential.gradient(theta)
    return (D * mass[:, None]).T @ D


def fisher_metric_hessian(fam: ExponentialFamily, theta) -> np.ndarray:
    """Closed-form Hessian of the cumulant generating function."""
    return fam.potential.hessian(fam._theta(theta))


def check_fisher(fam: ExponentialFamily, thetas) -> Report:
    """Expectation formula against ``Hess psi``; 1e-8 on finite spaces, 1e-6
    for truncated countable ones and Gauss-Hermite quadrature."""
    thetas = np.atleast_2d(thetas)
    worst = max((numdiff.scaled_error(fisher_metric_expectation(fam, t), fisher_metric_hessian(fam, t))
                 for t in thetas), default=0.0)
    tol = 1e-8 if fam.kind == "finite" else 1e-6
    return Report(f"fisher[{fam.label}]", {"expectation-vs-hessian": (worst, tol)}, len(thetas))


# ---------------------------------------------------------------------------
# catalog


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _softplus_sum(n: int, mult: float, name: str, params: dict, window=(-2.0, 2.0)) -> Potential:
    """``mult * ln(1 + sum_k exp(theta_k))``."""

    def soft(t):
        a = np.concatenate(([0.0], t))
        return np.exp(a - logsumexp(a))[1:]

    return Potential(
        name, n, Domain.reals(n),
        lambda t: mult * float(logsumexp(np.concatenate(([0.0], t)))),
        lambda t: mult * soft(t),
        lambda t: mult * (np.diag(soft(t)) - np.outer(soft(t), soft(t))),
        sample_window=window, params=params,
    )


def poisson() -> ExponentialFamily:
    pot = Potential("poisson", 1, Domain.reals(1),
                    lambda t: float(np.exp(t[0])), np.exp,
                    lambda t: np.array([[np.exp(t[0])]]))
    return ExponentialFamily(
        "poisson", {}, pot, "countable",
        C_fn=lambda k: -gammaln(np.asarray(k, dtype=float) + 1),
        F_fn=lambda k: np.asarray(k, dtype=float)[:, None],
        psi_text="exp(theta)",
    )


def categorical(dim: int = 1) -> ExponentialFamily:
    """Categorical on ``dim + 1`` outcomes ``1..dim+1``; the last is the reference."""
    if dim < 1:
        raise ValueError("categorical dimension must be >= 1")
    outcomes = tuple(range(1, dim + 2))
    F = np.vstack([np.eye(dim), np.zeros((1, dim))])
    return ExponentialFamily(
        "categorical", {"dim": dim}, _softplus_sum(dim, 1.0, "categorical", {"dim": dim}),
        "finite", outcomes, np.zeros(dim + 1), F,
        psi_text="ln(1 + sum exp(theta_k))",
    )


def binomial(n: int = 1) -> ExponentialFamily:
    if not 1 <= n <= MAX_BINOMIAL_N:
        raise ValueError(f"binomial n must be in [1, {MAX_BINOMIAL_N}]")
    ks = np.arange(n + 1)
    return ExponentialFamily(
        "binomial", {"n": n}, _softplus_sum(1, float(n), "binomial", {"n": n}),
        "finite", tuple(int(k) for k in ks), _log_binom(n, ks), ks[:, None].astype(float),
        psi_text="n ln(1 + exp(theta))",
    )


def multinomial_outcomes(m: int, n: int) -> list:
    """``Omega_{m,n}`` in lexicographically descending order; last is (0,...,0,n)."""
    out = [k for k in itertools.product(range(n, -1, -1), repeat=m) if sum(k) == n]
    return out


def multinomial(m: int = 2, n: int = 1) -> ExponentialFamily:
    """Multinomial ``M(m, n)``: m categories, n trials, dimension m - 1."""
    if not 2 <= m <= MAX_MULTINOMIAL_M or not 1 <= n <= MAX_BINOMIAL_N:
        raise ValueError(f"multinomial needs 2 <= m <= {MAX_MULTINOMIAL_M}, 1 <= n <= {MAX_BINOMIAL_N}")
    outs = multinomial_outcomes(m, n)
    K = np.array(outs, dtype=float)
    C = gammaln(n + 1) - gammaln(K + 1).sum(axis=1)
    return ExponentialFamily(
        "multinomial", {"m": m, "n": n},
        _softplus_sum(m - 1, float(n), "multinomial", {"m": m, "n": n}),
        "finite", tuple(outs), C, K[:, : m - 1],
        psi_text="n ln(1 + sum exp(theta_k))",
    )


def negative_binomial(r: int = 1) -> ExponentialFamily:
    if r < 1:
        raise ValueError("negative binomial r must be >= 1")

    def hess(t):
        e = np.exp(t[0])
        return np.array([[r * e / (1 - e) ** 2]])

    pot = Potential(
        "negative-binomial", 1, Domain.negative_orthant(1),
        lambda t: float(-r * np.log1p(-np.exp(t[0]))),
        lambda t: r * np.exp(t) / (1 - np.exp(t)),
        hess, sample_window=(-3.0, -0.2), params={"r": r},
    )
    return ExponentialFamily(
        "negative-binomial", {"r": r}, pot, "countable",
        C_fn=lambda k: _log_binom(np.asarray(k, dtype=float) + r - 1, r - 1.0),
        F_fn=lambda k: np.asarray(k, dtype=float)[:, None],
        psi_text="-r ln(1 - exp(theta))",
    )


def normal_known_variance() -> ExponentialFamily:
    pot = Potential("normal-known-var", 1, Domain.reals(1),
                    lambda t: 0.5 * float(t[0] ** 2), lambda t: t.copy(),
                    lambda t: np.eye(1))
    return ExponentialFamily(
        "normal-known-var", {}, pot, "continuous",
        C_fn=lambda x: -0.5 * np.log(2 * np.pi) - 0.5 * np.asarray(x, dtype=float) ** 2,
        toric=False, psi_text="theta^2 / 2",
    )


def _product_domain(d1: Domain, d2: Domain) -> Domain:
    if "simplex" in (d1.kind, d2.kind):
        raise ValueError("products of simplex domains are not supported")
    lo = d1.lower + d2.lower
    hi = d1.upper + d2.upper
    if all(np.isinf(lo)) and all(np.isinf(hi)):
        return Domain.reals(len(lo))
    return Domain.box(lo, hi)


def product(fam1: ExponentialFamily, fam2: ExponentialFamily) -> ExponentialFamily:
    """Product family on ``Omega_1 x Omega_2`` (lexicographic order)."""
    if fam1.kind != "finite" or fam2.kind != "finite":
        raise InfiniteSampleSpace("products are defined for finite sample spaces only")
    n1, n2 = fam1.dim, fam2.dim
    p1, p2 = fam1.potential, fam2.potential

    def hess(t):
        H = np.zeros((n1 + n2, n1 + n2))
        H[:n1, :n1] = p1.hessian(t[:n1])
        H[n1:, n1:] = p2.hessian(t[n1:])
        return H

    w1, w2 = p1.sample_window, p2.sample_window
    pot = Potential(
        f"{p1.name}x{p2.name}", n1 + n2, _product_domain(p1.domain, p2.domain),
        lambda t: p1.f(t[:n1]) + p2.f(t[n1:]),
        lambda t: np.concatenate((p1.grad(t[:n1]), p2.grad(t[n1:]))),
        hess, sample_window=(max(w1[0], w2[0]), min(w1[1], w2[1])),
    )
    pairs = list(itertools.product(range(len(fam1.outcomes)), range(len(fam2.outcomes))))
    outcomes = tuple((fam1.outcomes[i], fam2.outcomes[j]) for i, j in pairs)
    C = np.array([fam1.C_values[i] + fam2.C_values[j] for i, j in pairs])
    F = np.array([np.concatenate((fam1.F_values[i], fam2.F_values[j])) for i, j in pairs])
    return ExponentialFamily(
        "product", {"left": fam1.label, "right": fam2.label}, pot, "finite",
        outcomes, C, F, toric=fam1.toric and fam2.toric,
        psi_text=f"psi_1 + psi_2", components=(fam1, fam2),
    )


def inclusion_into_categorical(fam: ExponentialFamily) -> AffineMap:
    """Natural-parameter expression of the inclusion into the Categorical family.

    With outcomes ``x_0..x_r`` the i-th row is ``F(x_{i-1}) - F(x_r)`` and the
    offset ``C(x_{i-1}) - C(x_r)``.
    """
    if fam.kind != "finite":
        raise InfiniteSampleSpace(f"{fam.label} is not on a finite sample space")
    r = len(fam.outcomes) - 1
    A = fam.F_values[:-1] - fam.F_values[-1]
    B = fam.C_values[:-1] - fam.C_values[-1]
    return AffineMap(A, B, fam.space, categorical(r).space)


CATALOG = {
    "poisson": (poisson, {}),
    "categorical": (categorical, {"dim": 2}),
    "binomial": (binomial, {"n": 3}),
    "multinomial": (multinomial, {"m": 3, "n": 2}),
    "negative-binomial": (negative_binomial, {"r": 2}),
    "normal-known-var": (normal_known_variance, {}),
}


def make_family(name: str, **params) -> ExponentialFamily:
    """Build a catalog family; missing parameters take the catalog defaults."""
    try:
        ctor, defaults = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; known: {', '.join(CATALOG)}") from None
    kw = {**defaults, **{k: int(v) for k, v in params.items()}}
    return ctor(**kw)
