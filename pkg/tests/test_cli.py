import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fsdde.cli import main

SYSTEMS = Path(__file__).resolve().parents[1] / "systems"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def test_fbm_sample_csv(tmp_path, capsys):
    out = tmp_path / "w.csv"
    code, rep = report(capsys, "fbm-sample", "--hurst", 0.7, "--grid", 16, "--seed", 5, "--output", out)
    assert code == 0 and rep["seed"] == 5 and rep["config"]["hurst"] == 0.7
    lines = out.read_text().splitlines()
    assert lines[0] == "time,value" and len(lines) == 18
    assert lines[1] == "0,0"
    assert all(len(v.split(",")) == 2 for v in lines[1:])


def test_fbm_sample_json_inline(capsys):
    code, rep = report(capsys, "fbm-sample", "--grid", 16, "--format", "json")
    assert code == 0 and len(rep["result"]["path"]["values"]) == 17


def test_norms_from_sample(capsys):
    code, rep = report(capsys, "norms", "--grid", 128)
    assert code == 0
    assert rep["result"]["checks"]
    assert rep["result"]["lambda_alpha"] <= rep["result"]["lambda_alpha_bound"]


def test_norms_subsample_flag(capsys):
    code, rep = report(capsys, "norms", "--grid", 2048, "--subsample", 4)
    assert code == 0 and rep["result"]["stride"] == 4 and rep["result"]["lower_bound"]


def test_norms_from_file(tmp_path, capsys):
    f = tmp_path / "f.csv"
    t = np.linspace(0, 1, 65)
    f.write_text("time,value\n" + "".join(f"{a:.17g},{a:.17g}\n" for a in t))
    code, rep = report(capsys, "norms", "--input", f, "--beta", 0.5, "--delta", 0.25, "--lambda", 0)
    res = rep["result"]
    assert code == 0
    assert res["sup"] == 1.0 and res["seminorm"] == pytest.approx(1.0)
    assert res["windowed"] == pytest.approx((15 / 64) ** 0.5, rel=1e-12)
    assert res["lambda_norm"] == pytest.approx(2.0)


def test_integral_check(capsys):
    code, rep = report(capsys, "integral-check", "--grid", 256, "--integrand", "one")
    assert code == 0 and all(rep["result"]["checks"].values())


def test_simulate_zero_system(tmp_path, capsys):
    out = tmp_path / "sol.csv"
    code, rep = report(capsys, "simulate", "--system", SYSTEMS / "zero.cfg", "--grid", 64, "--output", out)
    assert code == 0
    vals = np.loadtxt(out, delimiter=",", skiprows=1)[:, 1]
    assert np.all(vals == 1.0)
    side = json.loads((tmp_path / "sol.json").read_text())
    assert side["iterations"] == 2 and side["config"]["system"].endswith("zero.cfg")


def test_simulate_method_of_steps(tmp_path, capsys):
    out = tmp_path / "sol.csv"
    code, rep = report(capsys, "simulate", "--system", SYSTEMS / "delay.cfg", "--horizon", 2, "--grid", 1024,
                       "--output", out)
    assert code == 0 and rep["result"]["X_T"][0] == pytest.approx(3.5, abs=1e-6)


def test_cocycle_check_zero_shift(capsys):
    code, rep = report(capsys, "cocycle-check", "--system", SYSTEMS / "linear.cfg", "--t", 0.5, "--tau", 0,
                       "--grid", 256)
    assert code == 0
    assert rep["result"]["residual"] <= 2 * rep["result"]["solver_tol"]


def test_cocycle_check_nontrivial(capsys):
    code, rep = report(capsys, "cocycle-check", "--system", SYSTEMS / "linear.cfg", "--t", 0.5, "--tau", 0.25,
                       "--grid", 256)
    assert code == 0 and rep["result"]["residual"] < 5e-2


def test_counterexample(capsys):
    code, rep = report(capsys, "counterexample", "--alpha", 0.25, "--t", 0.5, "--tau", 0.25, "--grid", 256)
    assert code == 0
    assert rep["result"]["rough_modulus"] >= 1 and rep["result"]["eta_norm"] == pytest.approx(2.0, abs=1e-12)


def test_sweep_sorted_and_thread_independent(capsys, monkeypatch):
    args = ("sweep", "--system", SYSTEMS / "linear.cfg", "--grid", 64, "--paths", 4, "--seed", 10)
    monkeypatch.setenv("FSDDE_THREADS", "1")
    code1, out1, _ = run(capsys, *args)
    monkeypatch.setenv("FSDDE_THREADS", "4")
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0 and out1 == out2
    assert [r["seed"] for r in json.loads(out1)["result"]["runs"]] == [10, 11, 12, 13]


def test_bad_thread_count_is_usage_error(capsys, monkeypatch):
    monkeypatch.setenv("FSDDE_THREADS", "zero")
    code, _, err = run(capsys, "sweep", "--system", SYSTEMS / "zero.cfg", "--grid", 16, "--paths", 1)
    assert code == 3 and "FSDDE_THREADS" in err


def test_determinism_and_timings(tmp_path, capsys):
    args = ("simulate", "--system", SYSTEMS / "linear.cfg", "--grid", 128, "--seed", 3)
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b and "timings" not in json.loads(a)
    _, c, _ = run(capsys, *args, "--timings")
    assert "timings" in json.loads(c)


@pytest.mark.parametrize(
    "argv",
    [
        ["norms", "--hurst", 0.75, "--alpha", 0.2],
        ["norms", "--alpha", 0.5],
        ["norms", "--grid", 100],
        ["norms", "--grid", 8],
        ["norms", "--grid", 32768],
        ["norms", "--seed", -1],
        ["norms", "--seed", 2**64],
        ["norms", "--hurst", 0.4],
        ["simulate", "--system", "/does/not/exist.cfg"],
        ["bogus"],
        ["cocycle-check", "--system", SYSTEMS / "linear.cfg", "--t", 0.75, "--tau", 0.5],
        ["counterexample", "--t", 0.5, "--tau", 0.3, "--grid", 64],
        ["simulate", "--system", SYSTEMS / "linear.cfg", "--grid", 16, "--horizon", 0.3],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 3


def test_malformed_system_file(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("delay=1.0\ndim=1\ndrift=linear a=x\ndiffusion=const\n")
    code, _, err = run(capsys, "simulate", "--system", bad, "--grid", 16)
    assert code == 3 and "line 3" in err


def test_solver_failure_is_numerical(capsys):
    code, out, _ = run(capsys, "simulate", "--system", SYSTEMS / "exponential.cfg", "--hurst", 0.8,
                       "--grid", 256, "--max-iter", 3)
    assert code == 2 and json.loads(out)["residuals"]


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fsdde.cli", "counterexample", "--grid", "64"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["passed"]
