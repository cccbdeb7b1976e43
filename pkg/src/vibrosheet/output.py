"""Output formatting: table, JSON, JSONL, CSV with field selection and jq filtering."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence
    from pathlib import Path


def fmt_num(value: Any) -> str:
    """Fixed 6-significant-digit rendering for reproducible diffs; NaN prints as ``nan``."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.6g}"
    return str(value)


def write_csv_atomic(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Write a CSV next to ``path`` and move it into place, so readers never see a torn file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt_num(v) for v in row])
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_json_atomic(path: Path, data: Any) -> None:
    """Atomic JSON write (temp file + rename)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(format_json(data))
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _json_safe(data: Any) -> Any:
    """Replace NaN/inf floats with None so JSON output stays standard."""
    if isinstance(data, float) and not math.isfinite(data):
        return None
    if isinstance(data, dict):
        return {k: _json_safe(v) for k, v in data.items()}
    if isinstance(data, list | tuple):
        return [_json_safe(v) for v in data]
    return data


def format_json(data: Any, indent: int = 2) -> str:
    """Format data as JSON string."""
    return json.dumps(_json_safe(data), indent=indent, default=str, ensure_ascii=False)


def format_jsonl(items: list[dict[str, Any]]) -> str:
    """Format items as line-delimited JSON (one JSON object per line)."""
    lines = [json.dumps(_json_safe(item), default=str, ensure_ascii=False) for item in items]
    return "\n".join(lines)


def format_csv_str(rows: list[dict[str, Any]], columns: list[str] | None = None) -> str:
    """Format rows as CSV string."""
    if not rows:
        return ""
    cols = columns or list(rows[0].keys())
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: fmt_num(row.get(k, "")) for k in cols})
    return buf.getvalue()


def format_table(rows: list[dict[str, Any]], columns: list[str] | None = None) -> str:
    """Format rows as a pretty aligned table using rich."""
    if not rows:
        return "No results."
    from rich.console import Console
    from rich.table import Table

    cols = columns or list(rows[0].keys())
    table = Table(show_header=True, header_style="bold")
    for col in cols:
        table.add_column(col, justify="right" if _numeric_column(rows, col) else "left")
    for row in rows:
        table.add_row(*(fmt_num(row.get(c, "")) for c in cols))

    buf = io.StringIO()
    console = Console(file=buf, force_terminal=False, width=160)
    console.print(table)
    return buf.getvalue()


def _numeric_column(rows: list[dict[str, Any]], col: str) -> bool:
    values = [row.get(col) for row in rows if row.get(col) is not None]
    return bool(values) and all(isinstance(v, int | float) and not isinstance(v, bool) for v in values)


def select_fields(data: Any, fields: list[str]) -> Any:
    """Keep only ``fields`` in a record or in each record of a list."""
    if isinstance(data, dict):
        return {k: v for k, v in data.items() if k in fields}
    if isinstance(data, list):
        return [select_fields(item, fields) for item in data]
    return data


def apply_jq(data: Any, expr: str) -> Any:
    """Apply a jq expression to data. Returns the transformed result."""
    import jq  # type: ignore[import-not-found]

    return jq.first(expr, _json_safe(data))


def _as_rows(data: Any) -> list[dict[str, Any]]:
    if isinstance(data, list):
        return list(data)
    return [data] if isinstance(data, dict) else [{"value": data}]


def render(
    data: Any,
    fmt: str = "table",
    fields: list[str] | None = None,
    jq_expr: str | None = None,
    columns: list[str] | None = None,
) -> str:
    """Render a record or list of records as table, json, jsonl or csv."""
    if fields:
        data = select_fields(data, fields)
    if jq_expr:
        data = apply_jq(data, jq_expr)

    if fmt == "jsonl":
        return format_jsonl(_as_rows(data))
    if fmt == "csv":
        return format_csv_str(_as_rows(data), columns)
    if fmt == "table":
        return format_table(_as_rows(data), columns)
    return format_json(data)
