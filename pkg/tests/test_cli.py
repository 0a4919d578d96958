"""Command-line frontend: outputs, exit codes, config files and replayability."""
import csv
import json
import math
import subprocess
import sys

import pytest

from willmore_lab import NonConvergent, cli


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_analyze_plane(tmp_path):
    assert run("analyze", "--surface", "plane", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "density_profile.csv")
    assert len(rows) == 7
    assert all(abs(float(r["theta"]) - 1) < 1e-9 and float(r["theta_err"]) >= 0 for r in rows)
    mono = read_csv(tmp_path / "monotonicity.csv")
    assert {r["term"] for r in mono} >= {"lhs", "residual", "slack_delta_0.1"}
    assert all(r["error"] != "" for r in mono)


def test_analyze_catenoid_final_theta(tmp_path):
    assert run("analyze", "--surface", "catenoid", "--r-max", 100, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "density_profile.csv")
    assert float(rows[-1]["r"]) == pytest.approx(100.0)
    assert float(rows[-1]["theta"]) == pytest.approx(2.0, rel=0.01)
    w = {r["quantity"]: r for r in read_csv(tmp_path / "willmore.csv")}
    assert float(w["theta_infinity"]["value"]) == pytest.approx(2.0, rel=0.01)


def test_analyze_mesh(tmp_path, fixtures_dir):
    assert run("analyze", "--mesh", fixtures_dir / "icosphere.off", "--out", tmp_path) == 0
    w = {r["quantity"]: r for r in read_csv(tmp_path / "willmore.csv")}
    val, err = float(w["willmore"]["value"]), float(w["willmore"]["error"])
    assert abs(val - 16 * math.pi) <= err
    assert w["genus"]["value"] == "0"


def test_invert_plane_offset(tmp_path):
    assert run("invert", "--surface", "plane", "--offset", 1, "--base", "0,0,0", "--out", tmp_path) == 0
    fit = json.loads((tmp_path / "sphere_fit.json").read_text())
    assert fit["residual"] <= 1e-8 and fit["radius"] == pytest.approx(0.5, abs=1e-9)
    ident = json.loads((tmp_path / "density_identity.json").read_text())
    assert abs(ident["residual"]) <= 0.02


def test_invert_base_on_surface_exit_3(tmp_path, capsys):
    assert run("invert", "--surface", "catenoid", "--base", "1,0,0", "--out", tmp_path) == 3
    assert "BasePointOnSurface" in capsys.readouterr().err


def test_flatness_sphere_pole(tmp_path):
    assert run("flatness", "--surface", "sphere", "--xi", "pole", "--scales", "0.05,0.1,0.2",
               "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "flatness.csv")
    for r in rows:
        assert float(r["eps"]) == pytest.approx(float(r["sigma"]) / 2, rel=0.1)
        assert float(r["err_bound"]) > 0


def test_ends_catenoid_json(tmp_path):
    assert run("ends", "--surface", "catenoid", "--out", tmp_path) == 0
    v = json.loads((tmp_path / "verdict.json").read_text())
    assert v["e"] == 2 and v["hypothesis_holds"] is True
    assert v["theta_inf"] == pytest.approx(2.0, rel=0.02)


def test_input_errors_exit_3(tmp_path):
    assert run("analyze", "--out", tmp_path) == 3
    assert run("analyze", "--surface", "nope", "--out", tmp_path) == 3
    assert run("flatness", "--surface", "catenoid", "--xi", "pole", "--out", tmp_path) == 3
    assert run("analyze", "--mesh", tmp_path / "missing.off", "--out", tmp_path) == 3
    assert run("analyze", "--surface", "plane", "--threads", "0", "--out", tmp_path) == 3


def test_numerical_errors_exit_2(tmp_path, monkeypatch):
    def boom(args):
        raise NonConvergent("no convergence")
    monkeypatch.setattr(cli, "cmd_analyze", boom)
    assert run("analyze", "--surface", "plane", "--out", tmp_path) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# plane run\nsurface = plane\nr-max = 50\nformat = json\n", encoding="utf-8")
    assert run("analyze", "--config", cfg, "--out", tmp_path / "a") == 0
    prof = json.loads((tmp_path / "a" / "density_profile.json").read_text())
    assert prof["rows"][-1]["r"] == pytest.approx(50.0)
    assert run("analyze", "--config", cfg, "--r-max", 20, "--format", "csv", "--out", tmp_path / "b") == 0
    assert float(read_csv(tmp_path / "b" / "density_profile.csv")[-1]["r"]) == pytest.approx(20.0)
    cfg.write_text("bogus = 1\n")
    assert run("analyze", "--config", cfg, "--out", tmp_path / "c") == 3


def test_byte_identical_across_thread_counts(tmp_path, monkeypatch):
    args = ["analyze", "--surface", "enneper", "--r-max", 50]
    assert run(*args, "--threads", 1, "--out", tmp_path / "t1") == 0
    monkeypatch.setenv(cli.THREADS_ENV, "4")
    assert run(*args, "--out", tmp_path / "t4") == 0
    for name in ("density_profile.csv", "willmore.csv", "monotonicity.csv"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t4" / name).read_bytes()


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "willmore_lab.cli", "analyze", "--surface", "plane",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0
    assert "density_profile.csv" in out.stdout
