import csv
import io
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from dftoric.checks import CheckSpec, ConfigError, default_suite, run_check
from dftoric.cli import format_value, load_schema, main, parse_config, parse_grid

SMALL = """
[suite]
seed = 5

[flat]
check = dual-flatness
family = binomial
params.n = 4
samples = 5

[lift]
check = lift
lift = segre
params.n = 1
params.m = 2
samples = 10

[legendre]
check = legendre-involution
potential = projective
params.n = 2
params.c = 0.5
samples = 10
seed = 99
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "suite.ini"
    p.write_text(SMALL)
    return p


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# -- families -------------------------------------------------------------


def test_families_list(capsys):
    code, out, _ = run(["families", "list"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 6
    assert sum("not toric" in line for line in lines) == 1
    assert lines[0].startswith("poisson")


def test_families_json(capsys):
    code, out, _ = run(["families", "list", "--json"], capsys)
    data = json.loads(out)
    assert code == 0 and len(data) == 6
    assert {d["name"] for d in data} >= {"poisson", "normal-known-var"}
    code, out, _ = run(["families", "list", "--family", "poisson", "--json"], capsys)
    (entry,) = json.loads(out)
    assert entry["dim"] == 1 and entry["toric"] is True


def test_families_unknown(capsys):
    code, _, err = run(["families", "list", "--family", "gamma"], capsys)
    assert code == 2 and "gamma" in err


def test_bad_arguments_exit_two(capsys):
    assert main(["nonsense"]) == 2
    assert main(["check", "--jobs", "x"]) == 2
    capsys.readouterr()


# -- check ----------------------------------------------------------------


def test_config_parsing_and_seeds():
    specs = parse_config(SMALL)
    assert [s.check for s in specs] == ["dual-flatness", "lift", "legendre-involution"]
    assert [s.seed for s in specs] == [5, 6, 99]
    assert specs[0].params == {"n": 4} and specs[2].params == {"n": 2, "c": 0.5}
    assert [s.seed for s in parse_config(SMALL, seed=100)][:2] == [100, 101]


@pytest.mark.parametrize("text", [
    "[a]\ncheck = nope\nfamily = poisson\n",
    "[a]\nfamily = poisson\n",
    "[a]\ncheck = lift\n",
    "[a]\ncheck = lift\nlift = segre\nfamily = poisson\n",
    "[a]\ncheck = fisher-crosscheck\nfamily = gamma\n",
    "[a]\ncheck = fisher-crosscheck\nfamily = poisson\nsamples = many\n",
    "[a]\ncheck = fisher-crosscheck\nfamily = poisson\ncolour = red\n",
    "[a]\ncheck = fisher-crosscheck\nfamily = binomial\nparams.n = 99\n",
    "[a]\ncheck = momentum\nfamily = negative-binomial\n",
    "[a]\ncheck = factorization\nfamily = normal-known-var\n",
    "[suite]\nseed = 1\nextra = 2\n",
    "not an ini file",
], ids=range(12))
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[a]\ncheck = nope\nfamily = poisson\n")
    code, _, err = run(["check", "--config", str(p)], capsys)
    assert code == 2 and "nope" in err
    code, _, _ = run(["check", "--config", str(tmp_path / "missing.ini")], capsys)
    assert code == 2
    code, _, _ = run(["check", "--only", "bogus"], capsys)
    assert code == 2


def test_unknown_aspect_is_config_error():
    with pytest.raises(ConfigError):
        run_check(CheckSpec("fisher-crosscheck", "poisson", aspect="nope", samples=2))


def test_check_runs_and_reports(small_cfg, tmp_path, capsys):
    out = tmp_path / "r.json"
    code, text, _ = run(["check", "--config", str(small_cfg), "--json", str(out)], capsys)
    assert code == 0
    assert text.count("PASS") == 3 and "3/3 checks passed" in text
    data = json.loads(out.read_text())
    jsonschema.validate(data, load_schema())
    assert [d["seed"] for d in data] == [5, 6, 99]
    assert all(d["runtime_ms"] >= 0 for d in data)


def test_json_to_stdout_keeps_log_on_stderr(small_cfg, capsys):
    code, out, err = run(["check", "--config", str(small_cfg), "--json", "-", "--no-timing"], capsys)
    assert code == 0 and len(json.loads(out)) == 3 and "PASS" in err


def test_determinism_and_threads(small_cfg, tmp_path, capsys):
    paths = [tmp_path / f"{i}.json" for i in range(3)]
    for p, jobs in zip(paths, ["1", "1", "3"]):
        assert main(["check", "--config", str(small_cfg), "--seed", "42", "--no-timing",
                     "--jobs", jobs, "--json", str(p)]) == 0
    capsys.readouterr()
    assert paths[0].read_bytes() == paths[1].read_bytes() == paths[2].read_bytes()


def test_zero_tolerance_fails(tmp_path, capsys):
    p = tmp_path / "strict.ini"
    p.write_text("[a]\ncheck = fisher-crosscheck\nfamily = poisson\nsamples = 3\ntol = 0\n")
    code, out, _ = run(["check", "--config", str(p)], capsys)
    assert code == 1 and "FAIL" in out


def test_aspect_and_tolerance_override():
    spec = CheckSpec("lift", "veronese", {"n": 2}, samples=5, aspect="target-isometry")
    r = run_check(spec, timing=False)
    assert r.aspect == "target-isometry" and r.tolerance == 1e-4 and r.passed and r.runtime_ms == 0
    r = run_check(CheckSpec("lift", "veronese", {"n": 2}, samples=5, aspect="lift-equation", tol=0.5))
    assert r.tolerance == 0.5 and r.passed


def test_only_filter(capsys):
    code, out, _ = run(["check", "--only", "kahler-function", "--no-timing"], capsys)
    assert code == 0 and "1/1 checks passed" in out


def test_default_suite_covers_every_check():
    from dftoric.checks import CHECKS
    suite = default_suite(3)
    assert {s.check for s in suite} == set(CHECKS)
    assert [s.seed for s in suite] == list(range(3, 3 + len(suite)))


# -- eval -----------------------------------------------------------------


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_eval_categorical_potential(capsys):
    code, out, _ = run(["eval", "--what", "potential", "--target", "categorical", "--param", "dim=1",
                        "--grid=-2:2:5"], capsys)
    rows = read_csv(out)
    assert code == 0 and len(rows) == 5
    for r in rows:
        assert float(r["value"]) == pytest.approx(np.logaddexp(0.0, float(r["x0"])), abs=1e-14)


def test_eval_metric(capsys):
    code, out, _ = run(["eval", "--what", "metric", "--target", "poisson", "--grid", "0|1"], capsys)
    rows = read_csv(out)
    assert [float(r["h00"]) for r in rows] == pytest.approx([1.0, np.e])


def test_eval_projective_momentum(capsys):
    code, out, _ = run(["eval", "--what", "momentum", "--target", "projective", "--grid=-0.5:0.5:11"], capsys)
    mus = [float(r["mu0"]) for r in read_csv(out)]
    assert code == 0 and all(-4 * np.pi < m < 0 for m in mus)


def test_eval_family_momentum_flags_domain_rows(capsys):
    code, out, _ = run(["eval", "--what", "momentum", "--target", "poisson", "--grid", "0|1,0"], capsys)
    rows = read_csv(out)
    assert float(rows[0]["mu0"]) == pytest.approx(-4 * np.pi)
    code, out, _ = run(["eval", "--what", "potential", "--target", "negative-binomial",
                        "--grid=-1|0.5"], capsys)
    rows = read_csv(out)
    assert rows[0]["error"] == "" and "DomainViolation" in rows[1]["error"] and rows[1]["value"] == ""


def test_eval_lift_complex_output(capsys):
    code, out, _ = run(["eval", "--what", "lift", "--target", "veronese", "--param", "n=2",
                        "--grid", "0,0|1", "--format", "json"], capsys)
    rows = json.loads(out)
    assert code == 0 and len(rows) == 2
    assert rows[0]["m1"].endswith("i") and float(rows[0]["residual"]) < 1e-12


def test_eval_empty_grid_and_file(tmp_path, capsys):
    out = tmp_path / "e.csv"
    code, _, _ = run(["eval", "--what", "potential", "--target", "poisson", "--grid", "", "--out", str(out)],
                     capsys)
    assert code == 0 and out.read_text() == "x0,value,error\n"


@pytest.mark.parametrize("argv", [
    ["--what", "potential", "--target", "poisson", "--grid", "0,1"],
    ["--what", "potential", "--target", "nothing", "--grid", "0"],
    ["--what", "momentum", "--target", "negative-binomial", "--grid", "0,0"],
    ["--what", "lift", "--target", "plucker", "--grid", "0,0"],
    ["--what", "potential", "--target", "poisson", "--grid", "a:b:c"],
    ["--what", "potential", "--target", "poisson", "--grid", "0", "--param", "oops"],
], ids=range(6))
def test_eval_config_errors(argv, capsys):
    assert main(["eval", *argv]) == 2
    capsys.readouterr()


def test_parse_grid_and_format():
    axes = parse_grid("0:1:3, 5|6")
    assert axes[0].tolist() == [0.0, 0.5, 1.0] and axes[1].tolist() == [5.0, 6.0]
    assert parse_grid("  ") == []
    assert format_value(1 - 2j) == "1.0-2.0i"
    assert format_value(0.1) == "0.1"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dftoric", "families", "list", "--json"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and len(json.loads(res.stdout)) == 6
