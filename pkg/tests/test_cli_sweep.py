"""Tests for the sweep command."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pytest
from click.testing import CliRunner

from tests.conftest import FIXTURES
from vibrosheet.cli import cli
from vibrosheet.models import ActuationPattern, BatteryPosition, SweepSpec
from vibrosheet.sweep import RESULT_HEADER, SweepRecord, SweepResult

SPEC = str(FIXTURES / "sweep_small.json")


def _lines(output: str) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    """Split jsonl output into optimum rows and progress events."""
    parsed = [json.loads(line) for line in output.splitlines() if line.startswith("{")]
    return [p for p in parsed if "objective" in p], [p for p in parsed if "progress" in p]


@pytest.fixture
def captured_specs(monkeypatch: pytest.MonkeyPatch) -> list[SweepSpec]:
    """Replace run_sweep with a stub that records the spec it was given."""
    seen: list[SweepSpec] = []

    def _run(spec: SweepSpec, **kwargs: Any) -> SweepResult:
        seen.append(spec)
        pattern = ActuationPattern(frequency=16, duty_left=0.6)
        record = SweepRecord(pattern, BatteryPosition.P1, 0.01, 0.3, 3.3, 2.0, False)
        return SweepResult([record])

    monkeypatch.setattr("vibrosheet.sweep.run_sweep", _run)
    return seen


class TestSweep:
    def test_writes_results_and_manifest(self, runner: CliRunner, tmp_path: Path) -> None:
        out = tmp_path / "run"
        result = runner.invoke(cli, ["sweep", "--spec", SPEC, "--output-dir", str(out), "--format", "jsonl"])
        assert result.exit_code == 0, result.output
        lines = (out / "results.csv").read_text().splitlines()
        assert lines[0] == ",".join(RESULT_HEADER)
        assert len(lines) == 3
        assert lines[1].startswith("16,0,0.6,0,P1,")
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "sweep"
        assert manifest["outputs"] == [str(out / "results.csv")]
        assert (out / "checkpoint.jsonl").is_file()

    def test_reports_every_objective(self, runner: CliRunner, tmp_path: Path) -> None:
        result = runner.invoke(cli, ["sweep", "--spec", SPEC, "--output-dir", str(tmp_path), "--format", "jsonl"])
        optima, progress = _lines(result.output)
        assert [o["objective"] for o in optima] == [
            "max_velocity_left",
            "max_velocity_right",
            "max_efficiency",
            "min_cot",
        ]
        assert all(o["freq_hz"] in (16.0, 20.0) for o in optima)
        assert [p["progress"]["done"] for p in progress] == [1, 2]

    def test_resume_reuses_points(self, runner: CliRunner, tmp_path: Path) -> None:
        args = ["sweep", "--spec", SPEC, "--output-dir", str(tmp_path), "--format", "jsonl"]
        first = runner.invoke(cli, args)
        assert first.exit_code == 0, first.output
        before = (tmp_path / "results.csv").read_bytes()
        second = runner.invoke(cli, [*args, "--resume"])
        assert second.exit_code == 0, second.output
        _, progress = _lines(second.output)
        assert progress == []
        assert (tmp_path / "results.csv").read_bytes() == before


class TestSweepWorkers:
    def test_default_is_one(self, runner: CliRunner, tmp_path: Path, captured_specs: list[SweepSpec]) -> None:
        runner.invoke(cli, ["sweep", "--spec", SPEC, "--output-dir", str(tmp_path), "--json"])
        assert captured_specs[0].workers == 1

    def test_env_applies_without_spec_value(
        self, runner: CliRunner, tmp_path: Path, monkeypatch: pytest.MonkeyPatch, captured_specs: list[SweepSpec]
    ) -> None:
        monkeypatch.setenv("VIBROSHEET_WORKERS", "3")
        runner.invoke(cli, ["sweep", "--spec", SPEC, "--output-dir", str(tmp_path), "--json"])
        assert captured_specs[0].workers == 3

    def test_spec_beats_env(
        self,
        runner: CliRunner,
        tmp_path: Path,
        monkeypatch: pytest.MonkeyPatch,
        captured_specs: list[SweepSpec],
    ) -> None:
        spec = json.loads(Path(SPEC).read_text())
        spec["workers"] = 2
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        monkeypatch.setenv("VIBROSHEET_WORKERS", "3")
        runner.invoke(cli, ["sweep", "--spec", str(path), "--output-dir", str(tmp_path / "out"), "--json"])
        assert captured_specs[0].workers == 2

    def test_flag_beats_spec(self, runner: CliRunner, tmp_path: Path, captured_specs: list[SweepSpec]) -> None:
        runner.invoke(cli, ["sweep", "--spec", SPEC, "--output-dir", str(tmp_path), "--workers", "4", "--json"])
        assert captured_specs[0].workers == 4

    def test_zero_workers_rejected(self, runner: CliRunner, tmp_path: Path, captured_specs: list[SweepSpec]) -> None:
        result = runner.invoke(cli, ["sweep", "--spec", SPEC, "--output-dir", str(tmp_path), "--workers", "0"])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["type"] == "invalid_range"
        assert captured_specs == []


class TestSweepErrors:
    def test_missing_spec(self, runner: CliRunner, tmp_path: Path) -> None:
        result = runner.invoke(cli, ["sweep", "--spec", str(tmp_path / "nope.json"), "--output-dir", str(tmp_path)])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["type"] == "config_error"

    def test_window_too_short(self, runner: CliRunner, tmp_path: Path) -> None:
        spec = json.loads(Path(SPEC).read_text())
        spec["grid"]["freqs"] = [8]
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        result = runner.invoke(cli, ["sweep", "--spec", str(path), "--output-dir", str(tmp_path / "out")])
        assert result.exit_code == 1
        err = json.loads(result.output)["error"]
        assert err["type"] == "invalid_config"
        assert err["violations"][0].startswith("protocol.measure")

    def test_unknown_key(self, runner: CliRunner, tmp_path: Path) -> None:
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"grid": {"freqs": [16]}, "threads": 2}))
        result = runner.invoke(cli, ["sweep", "--spec", str(path), "--output-dir", str(tmp_path / "out")])
        assert result.exit_code == 1
        assert json.loads(result.output)["error"]["violations"][0].startswith("threads:")
