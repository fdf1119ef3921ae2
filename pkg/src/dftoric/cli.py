"""Command-line front end.

    dftoric families list [--json] [--family NAME]
    dftoric check [--config FILE] [--only NAME] [--seed N] [--json OUT] [--no-timing] [--jobs N]
    dftoric eval --what W --target T --grid SPEC [--param K=V ...] [--out FILE] [--format csv|json]

Exit codes: 0 success, 1 a check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import numpy as np

from .checks import CHECKS, CheckSpec, ConfigError, default_suite, run_check, validate
from .core import POTENTIALS, make_potential
from .errors import DFToricError, DomainViolation
from .families import CATALOG, make_family
from .lifts import SHIPPED, make_lift
from .torification import (FlatCn, ProjectiveSpace, action_chart, make_factorization,
                           momentum_map)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
TARGET_KEYS = ("target", "family", "lift", "potential")
ENTRY_KEYS = {"check", "samples", "seed", "tol", "aspect", *TARGET_KEYS}


def load_schema() -> dict:
    text = resources.files("dftoric").joinpath("schema/check_report.schema.json").read_text()
    return json.loads(text)


def validate_reports(payload) -> None:
    import jsonschema

    jsonschema.validate(payload, load_schema())


# ---------------------------------------------------------------------------
# config


def _number(value: str, kind, key: str, section: str):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {value!r} is not a valid {kind.__name__}") from None


def _param_value(v: str):
    for kind in (int, float):
        try:
            return kind(v)
        except ValueError:
            pass
    return v


def parse_config(text: str, seed: int | None = None) -> list:
    """Parse an INI suite; every section except ``[suite]`` is one check.

    An entry without ``seed`` gets ``suite seed + its index``.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    base = seed
    if base is None:
        base = _number(cp.get("suite", "seed", fallback="0"), int, "seed", "suite")
    if cp.has_section("suite"):
        extra = set(cp["suite"]) - {"seed"}
        if extra:
            raise ConfigError(f"[suite] unknown keys: {', '.join(sorted(extra))}")
    specs = []
    entries = [s for s in cp.sections() if s != "suite"]
    for i, name in enumerate(entries):
        sec = cp[name]
        params = {k[len("params."):]: _param_value(v) for k, v in sec.items() if k.startswith("params.")}
        unknown = {k for k in sec if not k.startswith("params.")} - ENTRY_KEYS
        if unknown:
            raise ConfigError(f"[{name}] unknown keys: {', '.join(sorted(unknown))}")
        if "check" not in sec:
            raise ConfigError(f"[{name}] missing 'check'")
        targets = [sec[k] for k in TARGET_KEYS if k in sec]
        if len(targets) != 1:
            raise ConfigError(f"[{name}] needs exactly one of {', '.join(TARGET_KEYS)}")
        spec = CheckSpec(
            check=sec["check"],
            target=targets[0],
            params=params,
            samples=_number(sec["samples"], int, "samples", name) if "samples" in sec else None,
            seed=_number(sec["seed"], int, "seed", name) if "seed" in sec else base + i,
            tol=_number(sec["tol"], float, "tol", name) if "tol" in sec else None,
            aspect=sec.get("aspect"),
        )
        validate(spec)
        specs.append(spec)
    return specs


# ---------------------------------------------------------------------------
# families


def _jsonable(obj):
    """Strict-JSON copy: infinite bounds become the strings "inf" / "-inf"."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def cmd_families(args) -> int:
    names = list(CATALOG)
    if args.family is not None:
        if args.family not in CATALOG:
            print(f"error: unknown family {args.family!r}; known: {', '.join(names)}", file=sys.stderr)
            return EXIT_CONFIG
        names = [args.family]
    entries = [_jsonable(make_family(n).describe()) for n in names]
    if args.json:
        print(json.dumps(entries, indent=2, allow_nan=False))
        return EXIT_OK
    for e in entries:
        params = ", ".join(f"{k}={v}" for k, v in e["parameters"].items())
        params = f" ({params})" if params else ""
        print(f"{e['name']}{params}: dim {e['dim']}, psi = {e['psi']}, {e['sample_space']} sample space, "
              f"{'toric' if e['toric'] else 'not toric'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def cmd_check(args) -> int:
    try:
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read {args.config}: {exc}") from exc
            specs = parse_config(text, args.seed)
        else:
            specs = default_suite(0 if args.seed is None else args.seed)
        if args.only:
            wanted = [w.strip() for w in args.only.split(",") if w.strip()]
            bad = [w for w in wanted if w not in CHECKS]
            if bad:
                raise ConfigError(f"unknown check(s): {', '.join(bad)}")
            specs = [s for s in specs if s.check in wanted]

        def run(spec):
            return run_check(spec, timing=not args.no_timing)

        if args.jobs > 1:
            with ThreadPoolExecutor(args.jobs) as pool:
                reports = list(pool.map(run, specs))
        else:
            reports = [run(s) for s in specs]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    # keep stdout clean for a JSON stream
    log = sys.stderr if args.json == "-" else sys.stdout
    for r in reports:
        if not math.isfinite(r.max_abs_error):
            r.max_abs_error, r.passed = sys.float_info.max, False
        if not args.quiet:
            print(r.line(), file=log)
    payload = [r.to_dict() for r in reports]
    validate_reports(payload)
    if args.json:
        text = json.dumps(payload, indent=2) + "\n"
        if args.json == "-":
            sys.stdout.write(text)
        else:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text)
    failed = sum(not r.passed for r in reports)
    if not args.quiet:
        print(f"{len(reports) - failed}/{len(reports)} checks passed", file=log)
    return EXIT_OK if failed == 0 else EXIT_FAIL


# ---------------------------------------------------------------------------
# eval


def parse_grid(spec: str) -> list:
    """Axes separated by commas; each is ``start:stop:num`` or ``v1|v2|...``.

    Returns a list of per-axis value arrays; an empty spec is an empty grid.
    """
    spec = spec.strip()
    if not spec:
        return []
    axes = []
    for part in spec.split(","):
        part = part.strip()
        try:
            if ":" in part:
                a, b, num = part.split(":")
                axes.append(np.linspace(float(a), float(b), int(num)))
            else:
                axes.append(np.array([float(v) for v in part.split("|") if v.strip()]))
        except ValueError:
            raise ConfigError(f"bad grid axis {part!r}") from None
    return axes


def format_value(v) -> str:
    """Shortest round-trip repr; complex numbers as ``re+imi``."""
    if isinstance(v, (complex, np.complexfloating)):
        re, im = float(v.real), float(v.imag)
        sign = "-" if math.copysign(1.0, im) < 0 else "+"
        return f"{re!r}{sign}{abs(im)!r}i"
    return repr(float(v))


def _eval_setup(what: str, target: str, params: dict):
    """Returns (number of grid axes, input names, output names, row function)."""
    ip = {k: v for k, v in params.items()}

    if what in ("potential", "metric"):
        if target in CATALOG:
            pot = make_family(target, **{k: int(v) for k, v in ip.items()}).potential
        elif target in POTENTIALS:
            pot = make_potential(target, int(ip.get("n", 1)), float(ip.get("c", 1.0)))
        else:
            raise ConfigError(f"unknown potential target {target!r}")
        n = pot.dim
        ins = [f"x{i}" for i in range(n)]
        if what == "potential":
            return n, ins, ["value"], lambda x: [pot(x)]
        outs = [f"h{i}{j}" for i in range(n) for j in range(n)]
        return n, ins, outs, lambda x: list(pot.hessian(x).ravel())

    if what == "momentum":
        if target in ("flat", "projective"):
            n = int(ip.get("n", 1))
            geo = FlatCn(n) if target == "flat" else ProjectiveSpace(n, float(ip.get("c", 1.0)))
            ins = [f"x{i}" for i in range(n)]
            return n, ins, [f"mu{i}" for i in range(n)], lambda x: list(momentum_map(geo, action_chart(geo, x)))
        if target in CATALOG:
            try:
                fact = make_factorization(make_family(target, **{k: int(v) for k, v in ip.items()}))
            except DFToricError as exc:
                raise ConfigError(str(exc)) from exc
            if fact.target.kind == "disk":
                raise ConfigError(f"{fact.family.label}: no momentum map on the disk target")
            n = fact.dim
            ins = [f"q{i}" for i in range(n)] + [f"r{i}" for i in range(n)]

            def mu(v):
                if not fact.family.potential.domain.contains(v[:n]):
                    raise DomainViolation(f"theta {v[:n]} outside the natural domain")
                return list(momentum_map(fact.target, fact.tau(v[:n] + 1j * v[n:])))

            return 2 * n, ins, [f"mu{i}" for i in range(n)], mu
        raise ConfigError(f"unknown momentum target {target!r}")

    if what == "lift":
        if target not in SHIPPED:
            raise ConfigError(f"unknown lift {target!r}; known: {', '.join(SHIPPED)}")
        lift = make_lift(target, **{k: int(v) for k, v in ip.items()})
        n = lift.source_fact.dim
        d = lift.target.ambient_dim
        ins = [f"q{i}" for i in range(n)] + [f"r{i}" for i in range(n)]

        def row(v):
            z = v[:n] + 1j * v[n:]
            if not lift.source_fact.family.potential.domain.contains(z.real):
                raise DomainViolation(f"theta {z.real} outside the natural domain")
            w = lift.target.normalize(lift.m(lift.source_tau(z)))
            return list(w) + [lift.lift_residual(z)]

        return 2 * n, ins, [f"m{i}" for i in range(d)] + ["residual"], row

    raise ConfigError(f"unknown --what {what!r}")


def evaluate(what: str, target: str, grid: str, params: dict | None = None):
    """Header and rows of an evaluation table; failing rows carry an error message."""
    n_axes, ins, outs, fn = _eval_setup(what, target, params or {})
    axes = parse_grid(grid)
    if axes and len(axes) != n_axes:
        raise ConfigError(f"grid has {len(axes)} axes, {what} on {target} needs {n_axes}")
    header = ins + outs + ["error"]
    rows = []
    for point in (itertools.product(*axes) if axes else []):
        x = np.array(point, dtype=float)
        try:
            vals, err = fn(x), ""
        except (DFToricError, ValueError, ArithmeticError) as exc:
            vals, err = [None] * len(outs), f"{type(exc).__name__}: {exc}"
        rows.append(list(x) + vals + [err])
    return header, rows


def _render(header, rows, fmt: str) -> str:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, str):
            return v
        return format_value(v)

    def jcell(v):
        if v is None or isinstance(v, str):
            return v
        if isinstance(v, (complex, np.complexfloating)):
            return format_value(v)
        v = float(v)
        return v if math.isfinite(v) else format_value(v)

    if fmt == "json":
        return json.dumps([dict(zip(header, (jcell(v) for v in r))) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([cell(v) for v in r])
    return buf.getvalue()


def cmd_eval(args) -> int:
    try:
        params = {}
        for item in args.param or []:
            if "=" not in item:
                raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            params[k.strip()] = _param_value(v.strip())
        header, rows = evaluate(args.what, args.target, args.grid, params)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fmt = args.format or ("json" if args.out and args.out.endswith(".json") else "csv")
    text = _render(header, rows, fmt)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dftoric", description="Dually flat spaces and their toric Kähler lifts.")
    sub = p.add_subparsers(dest="command", required=True)

    fam = sub.add_parser("families", help="family catalog")
    fam_sub = fam.add_subparsers(dest="action", required=True)
    lst = fam_sub.add_parser("list", help="list cataloged families")
    lst.add_argument("--json", action="store_true", help="emit a JSON array")
    lst.add_argument("--family", metavar="NAME", help="show one family")
    lst.set_defaults(func=cmd_families)

    chk = sub.add_parser("check", help="run a check suite")
    chk.add_argument("--config", metavar="FILE", help="INI suite file (default: built-in suite)")
    chk.add_argument("--only", metavar="NAME", help="comma-separated check names to keep")
    chk.add_argument("--seed", type=int, help="base seed")
    chk.add_argument("--json", metavar="OUT", help="write the JSON report ('-' for stdout)")
    chk.add_argument("--no-timing", action="store_true", help="report runtime_ms = 0 for byte-identical output")
    chk.add_argument("--jobs", type=int, default=1, help="run checks on N threads")
    chk.add_argument("--quiet", action="store_true", help="no per-check lines")
    chk.set_defaults(func=cmd_check)

    ev = sub.add_parser("eval", help="evaluate on a grid")
    ev.add_argument("--what", required=True, choices=["potential", "metric", "momentum", "lift"])
    ev.add_argument("--target", required=True, help="family, potential, flat|projective, or lift name")
    ev.add_argument("--grid", required=True, help="axes 'start:stop:num' or 'v1|v2', comma separated")
    ev.add_argument("--param", action="append", metavar="KEY=VALUE", help="target parameter (repeatable)")
    ev.add_argument("--out", metavar="FILE")
    ev.add_argument("--format", choices=["csv", "json"])
    ev.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
