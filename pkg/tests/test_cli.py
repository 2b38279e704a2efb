import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from distsolve.cli import load_solution, main

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


EXP = """
L = 1.0
f = "1"
[Q]
coeffs = [1, 0, -1]
[P]
coeffs = [1]
"""


def test_solve_writes_outputs(tmp_path, capsys):
    assert main(["solve", str(PROBLEMS / "exponential.toml"), "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "solution.json").read_text())
    assert rec["alpha"] == 1
    assert rec["delta0"] == pytest.approx([1.0], abs=1e-10)
    assert rec["deltaL"] == pytest.approx([1.0], abs=1e-10)
    data = np.loadtxt(tmp_path / "regular.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(data[:, 1] - 1.0)) < 1e-10
    assert "delta0" in capsys.readouterr().out


def test_solution_json_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", str(PROBLEMS / "matern.toml"), "--out", str(out)]) == 0
    assert (a / "solution.json").read_bytes() == (b / "solution.json").read_bytes()
    assert (a / "regular.csv").read_bytes() == (b / "regular.csv").read_bytes()


def test_round_trip_through_verify(tmp_path, capsys):
    src = PROBLEMS / "second_order_p.toml"
    assert main(["solve", str(src), "--out", str(tmp_path)]) == 0
    sol = load_solution(tmp_path)
    assert sol.alpha == 1
    assert main(["verify", str(src), "--solution", str(tmp_path)]) == 0
    assert "PASS" in capsys.readouterr().out


def test_verify_reports_both_paths_for_m0(capsys):
    assert main(["verify", str(PROBLEMS / "matern.toml")]) == 0
    out = capsys.readouterr().out
    assert "residual = " in out and ("residual_general" in out or "residual_fast" in out)
    assert "symmetry_defect" in out and "tail_residual" in out


def test_perturbation_fails_verification(capsys):
    code = main(["verify", str(PROBLEMS / "exponential.toml"), "--perturb", "0:0:1e-3"])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out


def test_bad_perturb_argument():
    assert main(["verify", str(PROBLEMS / "exponential.toml"), "--perturb", "middle:0:1"]) == 2
    assert main(["verify", str(PROBLEMS / "exponential.toml"), "--perturb", "0:5:1"]) == 2


def test_odd_order_rejected(tmp_path, capsys):
    p = write(tmp_path, "odd.toml", EXP.replace("[1, 0, -1]", "[1, -1, 0, 1]"))
    assert main(["solve", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "error" in capsys.readouterr().err


def test_parse_error_reports_position(tmp_path, capsys):
    p = write(tmp_path, "bad.toml", EXP.replace('f = "1"', 'f = "1 + log(x)"'))
    assert main(["solve", str(p), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "log" in err and "4" in err


def test_unknown_key_rejected(tmp_path):
    p = write(tmp_path, "extra.toml", EXP + "\ncolour = 3\n")
    assert main(["solve", str(p), "--out", str(tmp_path / "o")]) == 2


def test_zero_rhs(tmp_path):
    p = write(tmp_path, "zero.toml", EXP.replace('f = "1"', 'f = "0"'))
    assert main(["solve", str(p), "--out", str(tmp_path / "o")]) == 0
    rec = json.loads((tmp_path / "o" / "solution.json").read_text())
    assert rec["delta0"] == [0.0] and rec["deltaL"] == [0.0]
    data = np.loadtxt(tmp_path / "o" / "regular.csv", delimiter=",", skiprows=1)
    assert np.all(data[:, 1] == 0.0)


def test_json_problem_file(tmp_path):
    doc = {"L": 1.0, "f": "1", "Q": {"coeffs": [1, 0, -1]}, "P": {"coeffs": [1]}}
    p = write(tmp_path, "p.json", json.dumps(doc))
    assert main(["solve", str(p), "--out", str(tmp_path / "o")]) == 0


def test_filter_demo_matches_single_solves(tmp_path):
    out = tmp_path / "fd"
    assert main(["filter-demo", str(PROBLEMS / "filter.toml"), "--out", str(out)]) == 0
    records = sorted(out.glob("record_*.json"))
    assert len(records) == 11
    rec = json.loads(records[3].read_text())
    assert rec["z"] == pytest.approx(0.3)
    assert rec["residual"] < 1e-6

    single = (PROBLEMS / "filter.toml").read_text().replace(
        "z = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]", "z = [0.3]")
    p = write(tmp_path, "single.toml", single)
    assert main(["solve", str(p), "--out", str(tmp_path / "s")]) == 0
    ref = json.loads((tmp_path / "s" / "solution.json").read_text())
    assert np.allclose(rec["delta0"], ref["delta0"], rtol=1e-12, atol=1e-14)
    assert np.allclose(rec["deltaL"], ref["deltaL"], rtol=1e-12, atol=1e-14)


def test_filter_demo_empty_grid(tmp_path):
    text = (PROBLEMS / "filter.toml").read_text().replace(
        "z = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]", "z = []")
    p = write(tmp_path, "empty.toml", text)
    assert main(["filter-demo", str(p), "--out", str(tmp_path / "fd")]) == 2


def test_sweep_writes_csv(tmp_path, capsys):
    assert main(["sweep", str(PROBLEMS / "exponential.toml"), "--out", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "sweep.csv", delimiter=",", skiprows=1)
    assert data.shape == (3, 8)
    assert np.all(np.diff(data[:, 1]) < 0)


def test_verify_rejects_variable_coefficients(tmp_path):
    assert main(["verify", str(PROBLEMS / "variable_q.toml")]) == 2


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "distsolve.cli", "solve", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "--out" in r.stdout
