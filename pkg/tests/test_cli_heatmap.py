"""Tests for the heatmap command."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from vibrosheet.cli import cli
from vibrosheet.models import ActuationPattern, BatteryPosition
from vibrosheet.sweep import SweepRecord, SweepResult

DUTIES = (0.0, 0.5, 0.9)


@pytest.fixture
def result_csv(tmp_path: Path) -> Path:
    records = [
        SweepRecord(
            ActuationPattern(frequency=f, duty_left=d_l, duty_right=d_r),
            BatteryPosition.P1,
            0.01 * d_l - 0.02 * d_r,
            0.5 * (d_l + d_r),
            1.0,
            2.0,
            False,
        )
        for f in (16.0, 20.0)
        for d_l in DUTIES
        for d_r in DUTIES
    ]
    path = tmp_path / "results.csv"
    SweepResult(records).write_csv(path)
    return path


class TestHeatmap:
    def test_duty_slice(self, runner: CliRunner, result_csv: Path) -> None:
        result = runner.invoke(cli, ["heatmap", str(result_csv), "--fix", "freq=16", "--fix", "phase=0", "--json"])
        assert result.exit_code == 0, result.output
        rows = json.loads(result.output)
        assert len(rows) == 3
        assert rows[1]["duty_left\\duty_right"] == 0.5
        assert rows[1]["0.9"] == pytest.approx(0.005 - 0.018)

    def test_metric_and_axes(self, runner: CliRunner, result_csv: Path) -> None:
        result = runner.invoke(
            cli,
            ["heatmap", str(result_csv), "--rows", "freq", "--cols", "duty_left"]
            + ["--fix", "phase=0", "--fix", "duty_right=0", "--metric", "power", "--json"],
        )
        rows = json.loads(result.output)
        assert [r["freq\\duty_left"] for r in rows] == [16.0, 20.0]
        assert rows[0]["0.5"] == pytest.approx(0.25)

    def test_writes_csv(self, runner: CliRunner, result_csv: Path, tmp_path: Path) -> None:
        out = tmp_path / "heat.csv"
        runner.invoke(
            cli, ["heatmap", str(result_csv), "--fix", "freq=20", "--fix", "phase=0", "--output", str(out), "--json"]
        )
        lines = out.read_text().splitlines()
        assert lines[0] == "duty_left\\duty_right,0.0,0.5,0.9"
        assert len(lines) == 4


class TestHeatmapErrors:
    def test_value_off_grid(self, runner: CliRunner, result_csv: Path) -> None:
        result = runner.invoke(cli, ["heatmap", str(result_csv), "--fix", "freq=18", "--fix", "phase=0"])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["type"] == "slice_mismatch"

    def test_missing_fixed_axis(self, runner: CliRunner, result_csv: Path) -> None:
        result = runner.invoke(cli, ["heatmap", str(result_csv), "--fix", "freq=16"])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["type"] == "slice_mismatch"

    @pytest.mark.parametrize("fix", ["freq16", "freq=fast"])
    def test_malformed_fix(self, runner: CliRunner, result_csv: Path, fix: str) -> None:
        result = runner.invoke(cli, ["heatmap", str(result_csv), "--fix", fix, "--fix", "phase=0"])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["type"] == "invalid_range"

    def test_not_a_result_file(self, runner: CliRunner, tmp_path: Path) -> None:
        path = tmp_path / "x.csv"
        path.write_text("a,b\n")
        result = runner.invoke(cli, ["heatmap", str(path), "--fix", "freq=16", "--fix", "phase=0"])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["type"] == "parse_error"
