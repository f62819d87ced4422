import json
import subprocess
import sys

import numpy as np
import pytest

from camstable import cli
from camstable.trajectory import Trajectory


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_derive_params(capsys):
    code, out, _ = run(capsys, "derive-params", "--L", "-1", "--E", "1.0541", "--g", "-0.1", "--b", "0.5")
    assert code == 0
    d = json.loads(out)
    assert d["alpha_star"] == pytest.approx(1.8, abs=1e-3)
    assert d["beta_star"] == pytest.approx(-0.25, abs=5e-3)


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"L": -1.0, "alpha_star": 1.6, "g": 1.0, "b": 0.3}))
    _, out, _ = run(capsys, "derive-params", "--config", str(cfg))
    assert json.loads(out)["alpha_star"] == pytest.approx(1.6)
    _, out, _ = run(capsys, "derive-params", "--config", str(cfg), "--alpha-star", "1.4")
    assert json.loads(out)["alpha_star"] == pytest.approx(1.4)


def test_exit_codes(capsys, tmp_path):
    # nu <= 0
    code, _, err = run(capsys, "derive-params", "--L", "-0.2", "--E", "1", "--g", "0", "--b", "1")
    assert code == 2 and "nu" in err
    # Condition A
    code, _, err = run(capsys, "estimate-sigma", "--eps", "0.01", "--T", "1", "--Delta", "0.01")
    assert code == 2 and "Condition A" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = run(capsys, "derive-params", "--config", str(bad))
    assert code == 2
    code, _, _ = run(capsys, "no-such-command")
    assert code == 2


def test_numerical_exit_code(capsys, monkeypatch):
    from camstable.errors import NumericalError

    def boom(o):
        raise NumericalError("forced")

    monkeypatch.setitem(cli.COMMANDS, "derive-params", boom)
    code, _, err = run(capsys, "derive-params")
    assert code == 3 and "forced" in err


def test_simulate_cam_and_zero_steps(capsys, tmp_path):
    out = tmp_path / "cam.csv"
    code, _, _ = run(capsys, "simulate-cam", "--n-steps", "50", "--out", str(out), "--seed", "3")
    assert code == 0
    t = Trajectory.from_csv(out)
    assert t.values.shape == (51,)
    assert json.loads(out.with_suffix(".json").read_text())["seed"] == 3
    empty = tmp_path / "empty.csv"
    assert run(capsys, "simulate-cam", "--n-steps", "0", "--out", str(empty))[0] == 0
    assert empty.read_text().strip() == "t,y"


def test_simulate_fast_warning(capsys, tmp_path):
    code, _, err = run(capsys, "simulate-cam", "--n-steps", "5", "--eps", "0.01", "--dt", "0.01", "--out", str(tmp_path / "f.csv"))
    assert code == 0 and "under-resolved" in err


def test_simulate_oulp(capsys, tmp_path):
    out = tmp_path / "o.csv"
    code, _, _ = run(capsys, "simulate-oulp", "--n-steps", "20", "--out", str(out))
    assert code == 0
    assert Trajectory.from_csv(out).values.shape == (21,)


@pytest.mark.property
def test_determinism_across_workers(capsys, tmp_path):
    args = ["estimate-sigma", "--eps", "1e-3", "--T", "0.5", "--Delta", "0.005", "--N-S", "60", "--repeats", "3"]
    outs = []
    for w, name in ((1, "a"), (1, "b"), (3, "c")):
        path = tmp_path / f"{name}.json"
        assert run(capsys, *args, "--workers", str(w), "--out", str(path))[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


@pytest.mark.property
def test_trajectory_csv_bit_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "simulate-cam", "--n-steps", "200", "--seed", "7", "--out", str(a))
    run(capsys, "simulate-cam", "--n-steps", "200", "--seed", "7", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_sweep_and_codiff_and_tails(capsys, tmp_path):
    sweep = tmp_path / "s.csv"
    code, _, _ = run(
        capsys, "sweep-sigma", "--eps", "1e-3", "--values", "0.005,0.01", "--N-Y", "50", "--N-S", "50",
        "--repeats", "2", "--out", str(sweep),
    )
    assert code == 0
    assert sweep.read_text().splitlines()[0] == "eps,Delta,sigma_Y,q25,q75,Sigma"
    summary = json.loads(sweep.with_suffix(".json").read_text())
    assert summary["expected_slope"] == pytest.approx(1 / 1.5)

    cd = tmp_path / "cd.csv"
    code, _, _ = run(capsys, "codiff", "--ratios", "5", "--n-pairs", "1000", "--repeats", "2", "--out", str(cd))
    assert code == 0 and len(cd.read_text().splitlines()) == 2

    code, out, _ = run(capsys, "tails", "--n-samples", "20000", "--quantile", "0.95", "--n-bins", "8")
    assert code == 0
    assert json.loads(out)["expected_exponent"] == pytest.approx(-2.5)


def test_acd_command(capsys, tmp_path):
    out = tmp_path / "acd.csv"
    code, _, _ = run(capsys, "acd", "--model", "oulp", "--n-paths", "20", "--T", "20", "--max-lag", "5", "--out", str(out))
    assert code == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (6, 5)


def test_experiment_command_small(capsys, tmp_path):
    out = tmp_path / "exp"
    code, stdout, _ = run(
        capsys, "experiment", "--system", "linear", "--eps-list", "0.1,0.05", "--Sigma", "0.8",
        "--n-paths", "40", "--T", "2", "--out", str(out),
    )
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["per_eps"]) == 2
    assert (out / "hist_full_eps0.1.csv").exists()
    assert "converging" in json.loads(stdout)


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "camstable.cli", "derive-params"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "alpha_star" in res.stdout
