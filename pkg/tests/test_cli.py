import io
import json
import subprocess
import sys

import pytest

from optdiv.cli import run
from optdiv.errors import (
    ConvergenceFailure,
    IllPosed,
    OptdivError,
    UsageError,
    ValidationError,
)


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def parse(text):
    return dict(line.split("=", 1) for line in text.splitlines())


@pytest.fixture
def cfg(table1_config):
    return table1_config


def test_solve_example(cfg):
    code, out, _ = call("solve", "--config", cfg, "--eta", 2, "--rho", 0)
    assert code == 0
    rec = parse(out)
    assert (rec["pi_star"], rec["kappa_star"], rec["xi_star"]) == ("0.32", "2.5", "0.11445")
    assert rec["method"] == "explicit"


def test_solve_json(cfg):
    code, out, _ = call("solve", "--config", cfg, "--lambda", 0.05, "--rho", 0.2, "--p", 0.1725, "--format", "json")
    assert code == 0
    rec = json.loads(out)
    assert rec["kappa_star"] == pytest.approx(1.46251695382, rel=1e-11)
    assert rec["method"] == "root"


def test_unfair_premium_exit_2(cfg):
    code, _, err = call("solve", "--config", cfg, "--lambda", 0.05, "--p", 0.11)
    assert code == 2
    assert "p > alpha + lambda*gamma" in err


def test_ill_posed_exit_3(cfg):
    code, _, err = call("solve", "--config", cfg, "--eta", 0.5, "--delta", 0.02)
    assert code == 3 and "psi" in err


def test_usage_errors_exit_1(cfg, tmp_path):
    code, _, err = call("solve", "--config", cfg, "--rho", "half")
    assert code == 1 and "--rho" in err
    assert call("nosuch")[0] == 1
    assert call("solve", "--config", tmp_path / "missing.cfg")[0] == 1
    assert call("objective", "--config", cfg, "--pi", 0.1)[0] == 1
    assert call("mc", "--config", cfg, "--pi", 0.1, "--kappa", 1, "--paths", 10)[0] == 1


def test_exit_code_mapping_is_exhaustive():
    from optdiv import errors

    classes = [c for c in vars(errors).values() if isinstance(c, type) and issubclass(c, OptdivError)]
    for c in classes:
        expect = 3 if issubclass(c, (IllPosed, ConvergenceFailure)) else 2 if issubclass(c, ValidationError) else 1
        assert c.exit_code == expect, c
    assert UsageError.exit_code == 1


def test_objective(cfg):
    code, out, _ = call("objective", "--config", cfg, "--pi", 0.32, "--kappa", 2.5, "--xi", 0.11445)
    assert code == 0
    assert parse(out)["objective"] == "-76.3428565321"
    code, _, _ = call("objective", "--config", cfg, "--pi", 0.1, "--kappa", 1, "--xi", 0)
    assert code == 2


def test_config_not_mutated(cfg, tmp_path):
    before = cfg.read_bytes()
    call("sweep-rho", "--config", cfg, "--points", 5, "--out", tmp_path)
    assert cfg.read_bytes() == before


def test_simulate_writes_under_out(cfg, tmp_path):
    code, out, _ = call("simulate", "--config", cfg, "--paths", 3, "--horizon", 1, "--steps", 10,
                        "--seed", 2, "--out", tmp_path / "p")
    assert code == 0 and parse(out)["paths"] == "3"
    assert sorted(f.name for f in (tmp_path / "p").iterdir()) == [
        "path_000000.csv", "path_000001.csv", "path_000002.csv"]


def test_sweeps(cfg, tmp_path):
    code, out, _ = call("sweep-rho", "--config", cfg, "--points", 10, "--etas", "1,2", "--out", tmp_path)
    assert code == 0 and parse(out)["rows"] == "20"
    assert (tmp_path / "sweep_rho.csv").exists() and (tmp_path / "sweep_rho.meta.json").exists()
    code, out, _ = call("sweep-lambda", "--config", cfg, "--points", 10, "--out", tmp_path)
    assert code == 0 and parse(out)["rows"] == "40"
    assert call("sweep-rho", "--config", cfg, "--lambda", 0.05, "--p", 0.2, "--out", tmp_path)[0] == 1


def test_sensitivity(cfg, tmp_path):
    code, out, _ = call("sensitivity", "--config", cfg, "--rho", 0.2, "--wrt", "rho", "--wrt", "beta",
                        "--out", tmp_path)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "wrt,component,analytic,finite_diff,rel_error" and len(lines) == 7
    assert (tmp_path / "sensitivity.csv").read_text() == out
    assert call("sensitivity", "--config", cfg, "--wrt", "gamma")[0] == 1


def test_mc_is_reproducible(cfg):
    argv = ("mc", "--config", cfg, "--eta", 2, "--rho", 0, "--x", 1, "--paths", 100_000, "--seed", 7)
    first, second = call(*argv), call(*argv)
    assert first[0] == 0 and first == second
    rec = parse(first[1])
    assert float(rec["abs_error"]) <= 3 * float(rec["std_error"]) + float(rec["tail_bound"])


def test_module_entry_point(cfg):
    proc = subprocess.run([sys.executable, "-m", "optdiv", "solve", "--config", str(cfg)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "kappa_star=2.5" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "optdiv", "solve", "--config", str(cfg), "--p", "0.05"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
