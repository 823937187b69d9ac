"""CLI surface: run, envgen, allocate, heatmap."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from driftsearch.cli import main

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "mini"


@pytest.fixture
def runner():
    return CliRunner()


def write_small_config(tmp_path):
    raw = json.loads((FIXTURE / "config.json").read_text())
    raw["n_particles"] = 400
    raw["scenarios"] = [s for s in raw["scenarios"] if s["kind"] != "reverse_drift"]
    raw["scenarios"][0]["weight"] = 0.5
    raw["scenarios"][0]["samples"] = 400
    raw["scenarios"][1]["weight"] = 0.5
    raw["scenarios"][1]["samples"] = 400
    raw["increments"] = raw["increments"][2:]  # sweeps only: fast
    raw["output_dir"] = str(tmp_path / "out")
    for key in ("current_csv", "wind_csv"):
        raw["environment"][key] = str(FIXTURE / raw["environment"][key])
    for inc in raw["increments"]:
        inc["regions"] = str(FIXTURE / inc["regions"])
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path, Path(raw["output_dir"])


class TestRunCommand:
    def test_run_writes_artifacts(self, runner, tmp_path):
        config_path, out_dir = write_small_config(tmp_path)
        result = runner.invoke(main, ["run", str(config_path)])
        assert result.exit_code == 0, result.output
        assert "status: ok" in result.output
        assert (out_dir / "manifest.json").exists()


class TestEnvgen:
    def test_uniform_field(self, runner, tmp_path):
        out = tmp_path / "cur.csv"
        result = runner.invoke(
            main,
            [
                "envgen", "uniform", "--kind", "current",
                "--center", "2.98,-30.59",
                "--radius-nm", "60", "--spacing-nm", "30",
                "--t0", "2009-06-01T00:00:00Z", "--t1", "2009-06-02T00:00:00Z",
                "--u-kts", "0.5", "--v-kts", "-0.2",
                "-o", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        from driftsearch.environment import VelocityField

        fld = VelocityField.from_csv(out)
        assert fld.kind == "current"
        assert np.all(fld.u == 0.5)
        assert np.all(fld.v == -0.2)

    def test_gyre_field(self, runner, tmp_path):
        out = tmp_path / "gyre.csv"
        result = runner.invoke(
            main,
            [
                "envgen", "gyre", "--kind", "current",
                "--center", "2.98,-30.59",
                "--t0", "2009-06-01T00:00:00Z", "--t1", "2009-06-01T12:00:00Z",
                "--omega-per-hour", "0.1",
                "-o", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert out.exists()


class TestAllocate:
    def test_allocate_round_trip(self, runner, tmp_path):
        cells = tmp_path / "cells.csv"
        cells.write_text(
            "cell_id,p,rho\nA,0.5,1.0\nB,0.3,1.0\nC,0.2,1.0\n"
        )
        out = tmp_path / "alloc.csv"
        result = runner.invoke(
            main, ["allocate", str(cells), "--budget", "2.0", "-o", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert "achieved detection probability" in result.output
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "cell_id,p,rho,effort_hours"
        efforts = [float(r.split(",")[3]) for r in rows[1:]]
        assert sum(efforts) <= 2.0 + 1e-9
        assert efforts[0] > efforts[2]  # more effort where probability is higher


class TestHeatmap:
    def test_heatmap_from_snapshot(self, runner, tmp_path):
        config_path, out_dir = write_small_config(tmp_path)
        assert runner.invoke(main, ["run", str(config_path)]).exit_code == 0
        snap = next(iter(sorted((out_dir / "snapshots").iterdir())))
        png = tmp_path / "map.png"
        result = runner.invoke(
            main,
            ["heatmap", str(snap), "--center", "2.98,-30.59", "-o", str(png)],
        )
        assert result.exit_code == 0, result.output
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
