import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from dressing_chain.cli import main
from dressing_chain.config import ConfigError, RunConfig, load_config

GOLDEN = Path(__file__).parent / "golden"
SHORT = ["--set", "x_end=0.3", "--set", "step=0.05"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def summary_from(err):
    return json.loads(err[: err.rindex("}") + 1])


def csv_rows(text):
    return list(csv.reader(io.StringIO(text)))


# -- schema


@pytest.mark.parametrize("command", ["invariants", "solve", "verify", "tau", "lame"])
def test_json_schema_golden(capsys, command):
    schema = json.loads((GOLDEN / "schema_v1.json").read_text())[command]
    _, out, _ = run(capsys, command, "--format", "json", *SHORT)
    doc = json.loads(out)
    assert list(doc) == schema["top"]
    assert doc["schema_version"] == 1 and doc["schema"] == f"dressing-chain/{command}"
    assert list(doc["summary"]) == schema["summary"]
    if "columns" in schema:
        assert list(doc["rows"][0]) == schema["columns"]


@pytest.mark.parametrize("command", ["solve", "verify", "lame"])
def test_csv_header_golden(capsys, command):
    schema = json.loads((GOLDEN / "schema_v1.json").read_text())[command]
    _, out, _ = run(capsys, command, *SHORT)
    assert csv_rows(out)[0] == schema["columns"]


def test_solve_csv_values_golden(capsys):
    code, out, _ = run(capsys, "solve", "--set", "x_end=0.003", "--set", "step=0.001")
    assert code == 0
    got, ref = csv_rows(out), csv_rows((GOLDEN / "solve_sample_head.csv").read_text())
    assert got[0] == ref[0] and len(got) == len(ref)
    for g, r in zip(got[1:], ref[1:]):
        np.testing.assert_allclose([float(v) for v in g[:5]], [float(v) for v in r[:5]], rtol=0, atol=1e-12)
        assert g[-1] == r[-1]


def test_floats_have_17_significant_digits(capsys):
    _, out, _ = run(capsys, "solve", "--set", "x_end=0.01", "--set", "step=0.01")
    value = csv_rows(out)[2][1]
    assert float(value) == float(format(float(value), ".17g"))
    assert len(value.replace("-", "").replace(".", "").lstrip("0").split("e")[0]) >= 15


# -- solve


def test_solve_sample(capsys):
    code, out, err = run(capsys, "solve")
    assert code == 0
    summary = json.loads(err)
    assert summary["max_residuals"]["ode"] < 1e-6
    assert summary["max_residuals"]["quartic"] < 1e-8
    rows = csv_rows(out)
    assert len(rows) == 802
    assert all(r[-1] == "0" for r in rows[1:])
    assert summary["C"] == pytest.approx(0.7) and summary["A"] == pytest.approx(1.264)


def test_solve_fixed_point(capsys):
    code, out, err = run(capsys, "solve", "--set", "mu=0.5,0.5,0.5", "--set", "initial_sigma=0.2,0.2,0.2")
    assert code == 0
    rows = csv_rows(out)[1:]
    for r in rows:
        assert [float(v) for v in r[1:4]] == [0.2, 0.2, 0.2]
        assert float(r[4]) == 0.0 and float(r[6]) == 0.0
        assert abs(float(r[5])) < 1e-15


def test_solve_corrupted_shift_fails(capsys):
    code, _, err = run(capsys, "solve", "--set", "x0_perturbation=0.01")
    assert code == 4
    summary = summary_from(err)
    assert summary["max_residuals"]["initial"] > 1e-3
    assert "residual checks failed" in err


def test_solve_degenerate_exit_code(capsys):
    code, out, err = run(capsys, "solve", "--set", "mu=0,0,0", "--set", "initial_sigma=1,0,0")
    assert code == 2
    assert "DegenerateLattice" in err and "discriminant" in err
    assert out == ""


def test_invariants_equal_mu_zero_c(capsys):
    code, out, _ = run(capsys, "invariants", "--format", "json", "--set", "mu=0.4,0.4,0.4",
                       "--set", "initial_sigma=0.3,-0.6,0.3")
    doc = json.loads(out)
    assert doc["summary"]["a"] == pytest.approx(0, abs=1e-15)


def test_invariants_sample(capsys):
    code, out, _ = run(capsys, "invariants", "--format", "json")
    s = json.loads(out)["summary"]
    assert code == 0 and s["curve_check"] == "pass"
    assert s["G2"] == pytest.approx(4.7009333333333, rel=1e-12)
    assert s["wp_2nu_residual"] < 1e-9 and s["wp_prime_2nu_residual"] < 1e-9


# -- verify


def test_verify_sample(capsys):
    code, out, err = run(capsys, "verify")
    assert code == 0
    s = json.loads(err)
    assert s["max_deviation"] < 1e-6 and not s["truncated"]


def test_verify_truncated_at_blowup(capsys):
    # RK4 at step 1e-3 is inaccurate just before the blow-up, so the default
    # 1e-3 mask fails the comparison while a wider window passes
    code, out, err = run(capsys, "verify", "--set", "x_end=2.0")
    s = summary_from(err)
    assert s["truncated"] and "common prefix" in s["note"]
    assert s["x_compared_end"] < s["blowup_at"] < 1.3
    assert code == 4
    code, out, err = run(capsys, "verify", "--set", "x_end=2.0", "--set", "pole_mask_halfwidth=0.05")
    s = summary_from(err)
    assert code == 0 and s["truncated"] and s["max_deviation"] < 1e-6
    rows = csv_rows(out)[1:]
    assert rows[-1][-1] == "1" and float(rows[-1][0]) == s["x_compared_end"]


def test_verify_tolerance_flag(capsys):
    code, _, _ = run(capsys, "verify", "--tolerance", "1e-20")
    assert code == 4


# -- tau


def test_tau_n3(capsys):
    code, out, err = run(capsys, "tau")
    assert code == 0
    assert out.splitlines() == ["g1*g2*g3: 1.0", "g1: 2.0 -1.0", "g2: 0.0 -1.0", "g3: 1.0 -1.0"]
    assert max(json.loads(err)["h_drift"]) < 1e-9


def test_tau_n3_json_drift(capsys):
    code, out, _ = run(capsys, "tau", "--format", "json")
    s = json.loads(out)["summary"]
    assert code == 0 and max(s["h_drift"]) < 1e-9 and s["lambda_degree"] == 1


def test_tau_n5(capsys):
    code, out, _ = run(capsys, "tau", "--format", "json", "--set", "mu=0.1,-0.2,0.3,0.05,-0.25",
                       "--set", "initial_sigma=0.1,0.2,-0.1,0.05,0.0", "--set", "beta=1,2,3,4,5")
    assert code == 0
    assert json.loads(out)["summary"]["lambda_degree"] == 2


def test_tau_even_period(capsys):
    code, _, err = run(capsys, "tau", "--set", "mu=0,1,2,3", "--set", "initial_sigma=0,0,0,0")
    assert code == 5 and "EvenPeriod" in err


# -- lame


def test_lame_sample(capsys):
    code, out, err = run(capsys, "lame")
    s = json.loads(err)
    assert code == 0
    assert s["max_residual"] < 1e-5 and s["fit_scatter"] < 1e-7


# -- config and plumbing


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sample\nn = 3\nmu = 0, 1, 2\ninitial_sigma = 0.3, -0.1, 0.5  # start\nx_end = 0.2\nstep = 0.01\n")
    c = load_config(cfg)
    assert c.mu == (0, 1, 2) and c.x_end == 0.2 and c.n == 3
    code, out, _ = run(capsys, "solve", "--config", str(cfg), "--format", "json")
    assert code == 0 and len(json.loads(out)["rows"]) == 21


def test_config_errors(tmp_path, capsys):
    with pytest.raises(ConfigError):
        load_config(None, {"bogus": "1"})
    with pytest.raises(ConfigError):
        load_config(None, {"n": "5"})
    with pytest.raises(ConfigError):
        RunConfig(step=-1.0)
    assert run(capsys, "solve", "--set", "step=abc")[0] == 1
    assert run(capsys, "solve", "--set", "novalue")[0] == 1
    assert run(capsys, "solve", "--config", str(tmp_path / "missing.cfg"))[0] == 1


def test_out_flag(tmp_path, capsys):
    target = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "solve", "--out", str(target), *SHORT)
    assert code == 0
    assert json.loads(out)["schema_version"] == 1
    assert target.read_text().startswith("x,sigma1")


@pytest.mark.parametrize("command", ["solve", "verify", "tau", "lame", "invariants"])
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_determinism_in_process(tmp_path, capsys, command, fmt):
    a, b = tmp_path / "a", tmp_path / "b"
    for target in (a, b):
        run(capsys, command, "--format", fmt, "--out", str(target), *SHORT)
    assert a.read_bytes() == b.read_bytes()


def test_determinism_across_processes(tmp_path):
    outs = []
    for k in range(2):
        target = tmp_path / f"run{k}.csv"
        subprocess.run(
            [sys.executable, "-m", "dressing_chain", "solve", "--out", str(target), *SHORT],
            check=True, capture_output=True,
        )
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
