"""Simulation-vs-experiment comparison: per-(frequency, phase) RMSE/PCC maps and histograms.

Velocities are compared in cm/s. Cells where either side is missing or failed are
excluded pairwise and counted.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol

from vibrosheet.errors import AxisMismatch, DegenerateSeries, GridMismatch, InvalidRange, ParseError
from vibrosheet.metrics import pcc, rmse
from vibrosheet.output import write_csv_atomic

if TYPE_CHECKING:
    from collections.abc import Iterable
    from pathlib import Path

logger = logging.getLogger(__name__)

CellKey = tuple[float, float, float, float]

ERROR_MAP_HEADER = ["freq_hz", "phase_deg", "rmse_cms", "pcc", "n_cells", "n_excluded"]
HISTOGRAM_HEADER = ["bin_lo", "bin_hi", "count"]
_AXIS_COLUMNS = ["freq_hz", "phase_deg", "duty_left", "duty_right"]


class VelocityGrid(Protocol):
    """Anything that exposes per-cell velocities in cm/s (sweep results, experiment grids)."""

    def velocity_cells(self) -> dict[CellKey, float]: ...


@dataclass
class ExperimentGrid:
    """Measured velocities (cm/s) on the sweep grid axes; NaN marks a missing measurement."""

    cells: dict[CellKey, float]
    provenance: list[str] = field(default_factory=list)

    def velocity_cells(self) -> dict[CellKey, float]:
        return self.cells

    def axis_values(self, axis: int) -> list[float]:
        return sorted({key[axis] for key in self.cells})

    def __len__(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class ErrorCell:
    """RMSE and PCC over the duty grid of one (frequency, phase) combination."""

    freq_hz: float
    phase_deg: float
    rmse_cms: float
    pcc: float | None
    n_cells: int
    n_excluded: int

    def row(self) -> list[float | int]:
        return [
            self.freq_hz,
            self.phase_deg,
            self.rmse_cms,
            math.nan if self.pcc is None else self.pcc,
            self.n_cells,
            self.n_excluded,
        ]

    def to_dict(self) -> dict[str, float | int | None]:
        return dict(zip(ERROR_MAP_HEADER, [*self.row()[:3], self.pcc, self.n_cells, self.n_excluded]))


@dataclass(frozen=True)
class Bin:
    lo: float
    hi: float
    count: int


def load_experiment(path: Path, battery: str | None = None) -> ExperimentGrid:
    """Parse a measured grid CSV.

    Accepts the sweep result schema without its power columns: axis columns plus
    ``velocity_cms`` (or ``velocity_mps``), optional ``battery_pos`` and ``failed``.
    Lines starting with ``#`` are kept as provenance notes.
    """
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ParseError(f"file not found: {path}", line=0) from exc

    provenance: list[str] = []
    data: list[tuple[int, str]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("#"):
            provenance.append(stripped.lstrip("#").strip())
        elif stripped:
            data.append((line_no, line))
    if not data:
        raise ParseError("empty file: no header row", line=1)

    header_line, header_text = data[0]
    header = [h.strip() for h in next(csv.reader([header_text]))]
    missing = [c for c in _AXIS_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"missing column(s): {', '.join(missing)}", line=header_line)
    if "velocity_cms" in header:
        vel_col, scale = header.index("velocity_cms"), 1.0
    elif "velocity_mps" in header:
        vel_col, scale = header.index("velocity_mps"), 100.0
    else:
        raise ParseError("missing velocity column (velocity_cms or velocity_mps)", line=header_line)
    axis_cols = [header.index(c) for c in _AXIS_COLUMNS]
    battery_col = header.index("battery_pos") if "battery_pos" in header else None
    failed_col = header.index("failed") if "failed" in header else None

    cells: dict[CellKey, float] = {}
    batteries: set[str] = set()
    for line_no, line in data[1:]:
        row = next(csv.reader([line]))
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line_no)
        if battery_col is not None:
            label = row[battery_col].strip()
            if battery is not None and label != battery:
                continue
            batteries.add(label)
        try:
            f, phase, d_l, d_r = (float(row[i]) for i in axis_cols)
            velocity = float(row[vel_col]) * scale
        except ValueError as exc:
            raise ParseError(str(exc), line=line_no) from exc
        if failed_col is not None and row[failed_col].strip() not in ("0", "false", "False", ""):
            velocity = math.nan
        key = (f, phase, d_l, d_r)
        if key in cells:
            raise AxisMismatch(f"line {line_no}: duplicate cell f={f:g} phase={phase:g} D_L={d_l:g} D_R={d_r:g}")
        cells[key] = velocity

    if len(batteries) > 1:
        raise AxisMismatch(f"file mixes battery positions {sorted(batteries)}; pass one to compare")
    return ExperimentGrid(cells=cells, provenance=provenance)


def _groups(cells: dict[CellKey, float]) -> dict[tuple[float, float], dict[tuple[float, float], float]]:
    groups: dict[tuple[float, float], dict[tuple[float, float], float]] = {}
    for (f, phase, d_l, d_r), v in cells.items():
        groups.setdefault((f, phase), {})[(d_l, d_r)] = v
    return groups


def error_maps(sim: VelocityGrid, exp: VelocityGrid) -> list[ErrorCell]:
    """RMSE (cm/s) and PCC for every (f, Φ) combination present in both grids.

    Each shared combination must cover the same duty cells on both sides.
    """
    sim_groups = _groups(sim.velocity_cells())
    exp_groups = _groups(exp.velocity_cells())
    shared = sorted(set(sim_groups) & set(exp_groups))
    if not shared:
        raise GridMismatch("Simulation and experiment share no (frequency, phase) combination")

    out: list[ErrorCell] = []
    for f, phase in shared:
        s, e = sim_groups[(f, phase)], exp_groups[(f, phase)]
        if set(s) != set(e):
            raise GridMismatch(f"Duty grids differ at f={f:g} Hz, phase={phase:g} deg")
        xs, ys = [], []
        excluded = 0
        for duty in sorted(s):
            a, b = s[duty], e[duty]
            if math.isfinite(a) and math.isfinite(b):
                xs.append(a)
                ys.append(b)
            else:
                excluded += 1
        if excluded:
            logger.info("f=%g phase=%g: %d cell(s) excluded", f, phase, excluded)
        error = rmse(xs, ys) if xs else math.nan
        corr: float | None
        try:
            corr = pcc(xs, ys) if len(xs) >= 2 else None
        except DegenerateSeries:
            corr = None
        out.append(ErrorCell(f, phase, error, corr, len(xs), excluded))
    return out


def histogram(values: Iterable[float], bin_width: float) -> list[Bin]:
    """Contiguous left-closed bins of ``bin_width`` anchored at 0, covering all finite values."""
    if not bin_width > 0:
        raise InvalidRange(f"bin_width must be > 0, got {bin_width!r}")
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return []
    # rounding keeps values that sit on an edge (0.3 / 0.1) in the upper bin
    index = [math.floor(round(v / bin_width, 9)) for v in finite]
    counts: dict[int, int] = {}
    for k in index:
        counts[k] = counts.get(k, 0) + 1
    return [Bin(k * bin_width, (k + 1) * bin_width, counts.get(k, 0)) for k in range(min(index), max(index) + 1)]


def percentage_errors(
    sim: VelocityGrid,
    exp: VelocityGrid,
    min_speed: float = 0.0,
    max_speed: float = math.inf,
) -> list[float]:
    """Per-cell ``100·|sim − exp| / |exp|`` for cells whose measured speed lies in [min_speed, max_speed)."""
    s, e = sim.velocity_cells(), exp.velocity_cells()
    out = []
    for key in sorted(set(s) & set(e)):
        a, b = s[key], e[key]
        if not (math.isfinite(a) and math.isfinite(b)) or b == 0:
            continue
        if min_speed <= abs(b) < max_speed:
            out.append(100.0 * abs(a - b) / abs(b))
    return out


def write_error_map(cells: list[ErrorCell], path: Path) -> None:
    write_csv_atomic(path, ERROR_MAP_HEADER, (c.row() for c in cells))


def write_histogram(bins: list[Bin], path: Path) -> None:
    write_csv_atomic(path, HISTOGRAM_HEADER, ([b.lo, b.hi, b.count] for b in bins))
