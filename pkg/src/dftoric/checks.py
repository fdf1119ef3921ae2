"""Named checks and the default suite driven by the command line."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (Report, legendre_pair, check_dual_flatness, check_dual_structure,
                   check_involution, check_legendre, make_potential, pushforward_metric_check)
from .dombrowski import check_closed_form, check_kahler_function, poisson_kahler_basis
from .errors import DFToricError
from .families import CATALOG, check_fisher, make_family
from .lifts import check_lift, make_lift, verify_kahler_immersion
from .torification import (LATTICE_PERIOD, ProductGeometry, check_action_isometry,
                           check_compatible_potential, check_factorization, check_momentum_gradient,
                           check_momentum_image_convex, compatible_potential, make_factorization,
                           potential_chart_map)


class ConfigError(DFToricError, ValueError):
    """Invalid suite configuration."""


@dataclass(frozen=True)
class CheckSpec:
    """One configured check run."""

    check: str
    target: str
    params: dict = field(default_factory=dict)
    samples: int | None = None
    seed: int = 0
    tol: float | None = None
    aspect: str | None = None


@dataclass
class CheckReport:
    check_name: str
    target: str
    parameters: dict
    n_samples: int
    seed: int
    max_abs_error: float
    tolerance: float
    passed: bool
    runtime_ms: float
    aspect: str

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "target": self.target,
            "parameters": self.parameters,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "max_abs_error": self.max_abs_error,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "runtime_ms": self.runtime_ms,
            "aspect": self.aspect,
        }

    def line(self) -> str:
        flag, rel = ("PASS", "<=") if self.passed else ("FAIL", "> ")
        return (f"{flag} {self.check_name:<20} {self.target:<32} {self.aspect:<22} "
                f"{self.max_abs_error:.3e} {rel} {self.tolerance:.0e}  ({self.runtime_ms:.0f} ms)")


def merge(name: str, *reports: Report) -> Report:
    results = {}
    for r in reports:
        for k, v in r.results.items():
            results[k if k not in results else f"{r.name}:{k}"] = v
    return Report(name, results, max(r.n_samples for r in reports))


# ---------------------------------------------------------------------------
# targets


def _int_params(params: dict) -> dict:
    try:
        return {k: int(v) for k, v in params.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integer parameters expected: {params}") from exc


def _family(target, params):
    if target not in CATALOG:
        raise ConfigError(f"unknown family {target!r}")
    try:
        return make_family(target, **_int_params(params))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{target}: {exc}") from exc


def _toric(target, params):
    fam = _family(target, params)
    try:
        return make_factorization(fam)
    except DFToricError as exc:
        raise ConfigError(str(exc)) from exc


def _momentum_target(target, params):
    fact = _toric(target, params)
    if fact.target.kind not in ("flat", "projective", "product"):
        raise ConfigError(f"{fact.family.label}: no momentum map on a {fact.target.kind} target")
    return fact


def _lift(target, params):
    try:
        return make_lift(target, **_int_params(params))
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _potential(target, params):
    try:
        p = make_potential(target, int(params.get("n", 1)), float(params.get("c", 1.0)))
        legendre_pair(p)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return p


def _poisson(target, params):
    if target != "poisson":
        raise ConfigError("kahler-function is implemented for the poisson family only")
    return make_family("poisson")


# ---------------------------------------------------------------------------
# runners: (target object, samples, rng, seed) -> Report


def _run_dual_flatness(fam, k, rng, seed):
    xs = fam.potential.sample(rng, k)
    return merge("dual-flatness", check_dual_flatness(fam.space, xs), check_dual_structure(fam.space, xs))


def _tangent_samples(fam, k, rng):
    q = fam.potential.sample(rng, k)
    r = rng.uniform(-LATTICE_PERIOD, LATTICE_PERIOD, size=q.shape)
    return np.hstack((q, r))


def _run_kahler_closed(fam, k, rng, seed):
    return check_closed_form(fam.space, _tangent_samples(fam, k, rng), rng)


def _run_factorization(fact, k, rng, seed):
    zs = fact.sample(rng, k)
    pts = [fact.tau(z) for z in zs]
    return merge("factorization", check_factorization(fact, zs, rng), check_action_isometry(fact.target, pts, rng))


def _run_momentum(fact, k, rng, seed):
    reports = [check_momentum_gradient(fact, fact.family.potential.sample(rng, k))]
    if not isinstance(fact.target, ProductGeometry):
        pot = compatible_potential(fact.target)
        xs = pot.sample(rng, k)
        reports.append(check_compatible_potential(fact.target, xs))
        reports.append(pushforward_metric_check(potential_chart_map(fact), xs))
    return merge("momentum", *reports)


def _run_convexity(fact, k, rng, seed):
    return check_momentum_image_convex(fact.target, fact, k, seed)


def _run_fisher(fam, k, rng, seed):
    return check_fisher(fam, fam.potential.sample(rng, k))


def _run_lift(lift, k, rng, seed):
    zs = lift.source_fact.sample(rng, min(k, 20))
    return merge("lift", check_lift(lift, k, seed), verify_kahler_immersion(lift, zs))


def _run_legendre(p, k, rng, seed):
    pair = legendre_pair(p)
    xs = p.sample(rng, k)
    return merge("legendre-involution", check_legendre(pair, xs), check_involution(pair, xs))


def _run_kahler_function(fam, k, rng, seed):
    vs = _tangent_samples(fam, k, rng)
    results = {}
    for name, (f, grad) in poisson_kahler_basis().items():
        rep = check_kahler_function(fam.space, f, vs, grad)
        results[f"killing[{name}]"] = rep.results["killing"]
        shift = np.array([0.0, LATTICE_PERIOD])
        per = max((abs(f(v + shift) - f(v)) / max(1.0, abs(f(v))) for v in vs), default=0.0)
        results[f"periodicity[{name}]"] = (per, 1e-12)
    return Report("kahler-function", results, len(vs))


@dataclass(frozen=True)
class CheckDef:
    build: Callable
    run: Callable
    samples: int
    description: str


CHECKS = {
    "dual-flatness": CheckDef(_family, _run_dual_flatness, 20,
                              "inverse metric, dual coordinates, pairing, potential constancy, dual torsion"),
    "kahler-closed": CheckDef(_family, _run_kahler_closed, 20, "d omega = 0, J^2 = -I, g/J/omega compatibility"),
    "factorization": CheckDef(_toric, _run_factorization, 100,
                              "kappa o tau, lattice periodicity, equivariance, pullback metric"),
    "momentum": CheckDef(_momentum_target, _run_momentum, 10,
                         "momentum vs gradient, compatible potential, action metric"),
    "lift": CheckDef(_lift, _run_lift, 100, "lift equation, equivariance, rho, Kähler immersion"),
    "legendre-involution": CheckDef(_potential, _run_legendre, 50,
                                    "inverse gradients, Fenchel equality, double transform"),
    "fisher-crosscheck": CheckDef(_family, _run_fisher, 20, "Fisher metric by expectation vs Hessian"),
    "convexity-scan": CheckDef(_momentum_target, _run_convexity, 1000, "momentum image and midpoints"),
    "kahler-function": CheckDef(_poisson, _run_kahler_function, 10, "Killing flow test and 4 pi periodicity"),
}


def validate(spec: CheckSpec):
    """Build the target of ``spec``; raises ConfigError on any problem."""
    if spec.check not in CHECKS:
        raise ConfigError(f"unknown check {spec.check!r}; known: {', '.join(CHECKS)}")
    if spec.samples is not None and spec.samples < 0:
        raise ConfigError("samples must be non-negative")
    if spec.tol is not None and not spec.tol >= 0:
        raise ConfigError("tol must be a non-negative number")
    return CHECKS[spec.check].build(spec.target, spec.params)


def _worst(results: dict, aspect: str | None):
    if aspect is not None:
        return aspect, results[aspect]

    def ratio(item):
        v, t = item[1]
        if v <= t:
            return v / t if t > 0 else 0.0
        return np.inf if t == 0 else v / t

    return max(results.items(), key=ratio)


def run_check(spec: CheckSpec, timing: bool = True) -> CheckReport:
    """Run one configured check and condense it to a single report line.

    Without an ``aspect`` the report carries the aspect closest to (or
    furthest past) its tolerance, so ``pass`` holds iff every aspect passes.
    A ``tol`` override applies to the named aspect, or to all of them.
    """
    target = validate(spec)
    d = CHECKS[spec.check]
    k = d.samples if spec.samples is None else spec.samples
    t0 = time.perf_counter()
    rep = d.run(target, k, np.random.default_rng(spec.seed), spec.seed)
    elapsed = (time.perf_counter() - t0) * 1e3 if timing else 0.0
    results = dict(rep.results)
    if spec.aspect is not None and spec.aspect not in results:
        raise ConfigError(f"{spec.check} has no aspect {spec.aspect!r}; known: {', '.join(results)}")
    if spec.tol is not None:
        for a in ([spec.aspect] if spec.aspect else results):
            results[a] = (results[a][0], spec.tol)
    aspect, (err, tol) = _worst(results, spec.aspect)
    return CheckReport(spec.check, target_label(target, spec.target), dict(spec.params), rep.n_samples,
                       spec.seed, float(err), float(tol), bool(err <= tol), round(elapsed, 3), aspect)


def target_label(target, fallback: str) -> str:
    """Printable identifier of a family, factorization, lift or potential."""
    if hasattr(target, "label"):
        return target.label
    if hasattr(target, "family"):
        return target.family.label
    params = getattr(target, "params", None)
    name = getattr(target, "name", fallback)
    if params:
        return f"{name}(" + ",".join(f"{k}={v}" for k, v in params.items()) + ")"
    return name


def default_suite(seed: int = 0) -> list:
    """Every check on every applicable catalog target."""
    fams = ["poisson", "categorical", "binomial", "multinomial", "negative-binomial", "normal-known-var"]
    toric = fams[:-1]
    entries = []
    entries += [("legendre-involution", p, prm) for p, prm in
                [("quadratic", {}), ("exp", {}), ("flat-cn", {"n": 2}), ("projective", {"n": 2, "c": 1.0}),
                 ("projective", {"n": 2, "c": 0.5})]]
    entries += [("dual-flatness", f, {}) for f in fams]
    entries += [("fisher-crosscheck", f, {}) for f in fams]
    entries += [("kahler-closed", f, {}) for f in fams]
    entries += [("factorization", f, {}) for f in toric]
    entries += [("momentum", f, {}) for f in ["poisson", "categorical", "binomial", "multinomial"]]
    entries += [("convexity-scan", f, {}) for f in ["poisson", "categorical", "multinomial"]]
    entries += [("lift", name, prm) for name, prm in
                [("veronese", {"n": 2}), ("veronese", {"n": 5}), ("veronese-multinomial", {"m": 2, "n": 2}),
                 ("segre", {"n": 1, "m": 1}), ("segre", {"n": 2, "m": 2})]]
    entries.append(("kahler-function", "poisson", {}))
    return [CheckSpec(c, t, p, seed=seed + i) for i, (c, t, p) in enumerate(entries)]
