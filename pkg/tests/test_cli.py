import os
import subprocess
import sys

import pytest

from coop_tpik.cli import main


def test_validate_ok(capsys):
    assert main(["validate", "--scenario", "scenario_1_perfect"]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("[mission]\ndt = -1\n[agent]\n[agent]\n")
    assert main(["validate", "--scenario", str(p)]) == 2
    assert f"{p}:2: dt must be > 0" in capsys.readouterr().err


def test_run_short_timeout_writes_telemetry(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--scenario", "scenario_1_perfect", "--duration", "0.5", "--out", str(out)])
    assert code == 3
    assert "timeout" in capsys.readouterr().out
    assert sorted(os.listdir(out)) == sorted(
        ["poses.csv", "wrench.csv", "goal.csv", "solver.csv", "cooperation.csv", "velocities.csv", "summary.json"]
    )


def test_run_rejects_bad_override(capsys):
    assert main(["run", "--scenario", "scenario_1_perfect", "--dt", "0"]) == 2
    assert "--dt" in capsys.readouterr().err


def test_run_flags_reach_the_scenario(tmp_path):
    out = tmp_path / "r"
    main(["run", "--scenario", "scenario_3_vision", "--duration", "0.2", "--disable-change-goal",
          "--disable-ft-objective", "--out", str(out)])
    header = (out / "solver.csv").read_text().splitlines()[0]
    assert "force-torque" not in header
    main(["run", "--scenario", "scenario_1_perfect", "--duration", "0.2", "--enable-ft-objective", "--out", str(out)])
    header = (out / "solver.csv").read_text().splitlines()[0]
    assert "force-torque" in header


def test_sweep_prints_one_row_per_error(capsys):
    code = main(["sweep", "--scenario", "scenario_2_goal_error", "--duration", "0.3", "--errors", "0,0.015"])
    assert code == 3
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and lines[1].split()[0] == "0.0000" and lines[2].split()[0] == "0.0150"


def test_sweep_rejects_bad_list(capsys):
    assert main(["sweep", "--scenario", "scenario_2_goal_error", "--errors", "a,b"]) == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "coop_tpik", "validate", "--scenario", "scenario_2_goal_error"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
