import csv
import json
import subprocess
import sys

import pytest

from fraclangevin.cli import run
from fraclangevin.config import RunConfig


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_rate_unit(tmp_path, capsys):
    code = run(["rate", "--alpha1", "1", "--alpha2", "1", "--alpha3", "1", "--lambda", "1",
                "--out", str(tmp_path)])
    assert code == 0
    line = capsys.readouterr().out
    assert "eps0=0.25" in line and "lambda0=0.05" in line and "C=1.6667" in line
    r = json.loads((tmp_path / "rate.json").read_text())
    assert r["eps0"] == 0.25 and r["lambda0"] == 0.05


def test_rate_invalid_alpha1(tmp_path, capsys):
    assert run(["rate", "--alpha1", "0", "--out", str(tmp_path)]) == 1
    assert "alpha1" in capsys.readouterr().err
    assert _manifest(tmp_path)["status"] == "validation-error"


def test_constants(tmp_path, capsys):
    assert run(["constants", "--d", "1", "--alpha", "1", "--out", str(tmp_path)]) == 0
    assert "0.3183098862" in capsys.readouterr().out
    c = json.loads((tmp_path / "constants.json").read_text())
    assert c["c_riesz"] is None
    assert run(["constants", "--d", "3", "--alpha", "1", "--order", "2", "--out", str(tmp_path)]) == 0
    assert "0.07957747155" in capsys.readouterr().out


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": {"alpha": 1.5, "gamma": 2}}))
    assert run(["c-star", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_bad_flag_and_missing_file(tmp_path):
    assert run(["rate", "--lambda", "abc"]) == 1
    assert run(["rate", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    assert run(["simulate", "--seed", "-3", "--out", str(tmp_path)]) == 1


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dms": {"alpha1": 4.0, "lam": 4.0}}))
    assert run(["rate", "--config", str(cfg), "--alpha1", "1", "--out", str(tmp_path)]) == 0
    r = json.loads((tmp_path / "rate.json").read_text())
    assert r["alpha1"] == 1.0 and r["lam"] == 4.0


def test_manifest_roundtrip(tmp_path):
    assert run(["rate", "--alpha2", "2.5", "--seed", "123", "--out", str(tmp_path)]) == 0
    m = _manifest(tmp_path)
    cfg = RunConfig.model_validate(m["config"])
    assert cfg.model_dump(mode="json") == m["config"]
    assert cfg.seed == 123 and cfg.dms.alpha2 == 2.5 and m["version"]


def test_fracop_csv(tmp_path):
    assert run(["fracop", "--alpha", "1.5", "--points", "0", "0.5", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "fracop.csv")))
    assert len(rows) == 2
    for r in rows:
        assert float(r["value"]) == pytest.approx(float(r["gaussian_reference"]), rel=1e-3)


def test_dms_certify(tmp_path):
    assert run(["dms-certify", "--n-models", "3", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "dms_certify.json").read_text())
    assert d["violations"] == 0 and len(d["models"]) == 3
    with open(tmp_path / "dms_table.csv") as fh:
        assert fh.readline().strip() == "seed,t,max_norm_ratio,bound"


def test_poisson_fd(tmp_path):
    assert run(["poisson", "--method", "fd", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "poisson.json").read_text())
    assert d["fd"]["value"] == pytest.approx(0.35, abs=1e-6)


def test_carre_gap_tolerance_failure(tmp_path):
    # an impossible tolerance must surface as a failed check, not a crash
    assert run(["carre-gap", "--gap-tol", "1e-14", "--out", str(tmp_path)]) == 3
    assert _manifest(tmp_path)["status"] == "check-failed"


def test_command_needs_one_dimension(tmp_path):
    assert run(["poincare", "--d", "2", "--out", str(tmp_path)]) == 1


def test_simulate_and_decay_fit(tmp_path):
    sim = tmp_path / "sim"
    args = ["--n-particles", "200", "--t-end", "10", "--stride", "50", "--seed", "4"]
    assert run(["simulate", *args, "--out", str(sim)]) == 0
    d = json.loads((sim / "simulation.json").read_text())
    assert d["stationarity"]["x"]["passed"] and d["stationarity"]["v"]["passed"]
    for f in ("statistics.csv", "trajectories.csv", "manifest.json"):
        assert (sim / f).exists()
    fit = tmp_path / "fit"
    code = run(["decay-fit", "--input", str(sim / "trajectories.csv"), "--out", str(fit)])
    d = json.loads((fit / "decay_fit.json").read_text())
    assert code == (0 if d["fit"]["ci"][0] > 0 else 3)
    assert d["theory"]["half_lambda0"] > 0


def test_simulate_reproducible(tmp_path):
    args = ["simulate", "--n-particles", "50", "--t-end", "1", "--stride", "100", "--seed", "9"]
    assert run([*args, "--out", str(tmp_path / "a")]) == 0
    assert run([*args, "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    a = (tmp_path / "a" / "trajectories.csv").read_text()
    assert a == (tmp_path / "b" / "trajectories.csv").read_text()


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "fraclangevin.cli", "rate", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert p.returncode == 0 and "lambda0=0.05" in p.stdout


def test_decay_fit_accepts_output_directory(tmp_path):
    sim = tmp_path / "sim"
    assert run(["simulate", "--n-particles", "50", "--t-end", "5", "--out", str(sim)]) == 0
    code = run(["decay-fit", "--input", str(sim), "--out", str(tmp_path / "fit")])
    assert code in (0, 3)
    assert (tmp_path / "fit" / "decay_fit.json").exists()
    assert run(["decay-fit", "--input", str(tmp_path / "nothing"), "--out", str(tmp_path / "f2")]) == 1
