"""Tests for number formatting, atomic writers and output rendering."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import TYPE_CHECKING

import pytest

from vibrosheet.output import (
    apply_jq,
    fmt_num,
    format_csv_str,
    format_json,
    format_jsonl,
    format_table,
    render,
    select_fields,
    write_csv_atomic,
    write_json_atomic,
)

if TYPE_CHECKING:
    from collections.abc import Iterator

ROWS = [
    {"freq_hz": 16.0, "velocity_cms": 2.9012345, "battery_pos": "P1"},
    {"freq_hz": 20.0, "velocity_cms": math.nan, "battery_pos": "P3"},
]


class TestFmtNum:
    @pytest.mark.parametrize(
        ("value", "expected"),
        [
            (0.029012345678, "0.0290123"),
            (16.0, "16"),
            (1.0e-7, "1e-07"),
            (math.nan, "nan"),
            (True, "1"),
            (False, "0"),
            (42, "42"),
            (None, ""),
            ("P1", "P1"),
        ],
    )
    def test_formats(self, value: object, expected: str) -> None:
        assert fmt_num(value) == expected


class TestAtomicWriters:
    def test_csv(self, tmp_path: Path) -> None:
        out = tmp_path / "sub" / "out.csv"
        write_csv_atomic(out, ["a", "b"], [[1.5, "x"], [math.nan, True]])
        assert out.read_text() == "a,b\n1.5,x\nnan,1\n"

    def test_csv_leaves_no_temp_files(self, tmp_path: Path) -> None:
        write_csv_atomic(tmp_path / "out.csv", ["a"], [[1]])
        assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]

    def test_csv_failure_keeps_previous_file(self, tmp_path: Path) -> None:
        out = tmp_path / "out.csv"
        out.write_text("old\n")

        def rows() -> Iterator[list[float]]:
            yield [1.0]
            raise RuntimeError("interrupted")

        with pytest.raises(RuntimeError):
            write_csv_atomic(out, ["a"], rows())
        assert out.read_text() == "old\n"
        assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]

    def test_json(self, tmp_path: Path) -> None:
        out = tmp_path / "manifest.json"
        write_json_atomic(out, {"wall_time_s": 1.5, "pcc": math.nan})
        assert json.loads(out.read_text()) == {"wall_time_s": 1.5, "pcc": None}


class TestFormatters:
    def test_json_replaces_nan(self) -> None:
        assert json.loads(format_json(ROWS))[1]["velocity_cms"] is None

    def test_jsonl_one_object_per_line(self) -> None:
        lines = format_jsonl(ROWS).split("\n")
        assert len(lines) == 2
        assert json.loads(lines[0])["battery_pos"] == "P1"

    def test_csv_uses_fixed_precision(self) -> None:
        text = format_csv_str(ROWS)
        assert text.splitlines() == ["freq_hz,velocity_cms,battery_pos", "16,2.90123,P1", "20,nan,P3"]

    def test_csv_columns(self) -> None:
        assert format_csv_str(ROWS, ["battery_pos"]).splitlines() == ["battery_pos", "P1", "P3"]

    def test_csv_empty(self) -> None:
        assert format_csv_str([]) == ""

    def test_table(self) -> None:
        text = format_table(ROWS)
        assert "velocity_cms" in text
        assert "2.90123" in text
        assert "P3" in text

    def test_table_empty(self) -> None:
        assert format_table([]) == "No results."


class TestSelection:
    def test_select_fields_list(self) -> None:
        assert select_fields(ROWS, ["battery_pos"]) == [{"battery_pos": "P1"}, {"battery_pos": "P3"}]

    def test_select_fields_dict(self) -> None:
        assert select_fields({"a": 1, "b": 2}, ["b"]) == {"b": 2}

    def test_select_fields_ignores_scalars(self) -> None:
        assert select_fields(3.5, ["a"]) == 3.5

    def test_jq(self) -> None:
        assert apply_jq(ROWS, "[.[] | .freq_hz]") == [16.0, 20.0]

    def test_jq_sees_nan_as_null(self) -> None:
        assert apply_jq(ROWS, ".[1].velocity_cms") is None


class TestRender:
    def test_json(self) -> None:
        assert json.loads(render({"velocity_cms": 2.9}, "json")) == {"velocity_cms": 2.9}

    def test_csv_from_dict(self) -> None:
        assert render({"velocity_cms": 2.9}, "csv").splitlines() == ["velocity_cms", "2.9"]

    def test_fields_then_jq(self) -> None:
        out = render(ROWS, "json", fields=["freq_hz"], jq_expr="map(.freq_hz)")
        assert json.loads(out) == [16.0, 20.0]

    def test_table_columns(self) -> None:
        out = render(ROWS, "table", columns=["battery_pos"])
        assert "battery_pos" in out
        assert "freq_hz" not in out

    def test_unknown_format_falls_back_to_json(self) -> None:
        assert json.loads(render([1, 2], "yaml")) == [1, 2]

    def test_scalar_jq_result_in_table(self) -> None:
        out = render(ROWS, "table", jq_expr="length")
        assert "value" in out
        assert "2" in out
