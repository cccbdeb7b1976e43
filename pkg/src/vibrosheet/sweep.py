"""Simulation sweeps over actuation-pattern grids, optimum search and heat-map export.

Records are ordered pattern-major (``pattern_grid`` order) with battery positions
innermost, whatever the worker count or completion order. Failed points are kept
with NaN metrics so optima are never artifacts of a diverged run.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import logging
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Literal, NamedTuple

import numpy as np
import numpy.typing as npt

from vibrosheet import __version__
from vibrosheet.actuation import pattern_grid
from vibrosheet.dynamics import simulate, steady_state_velocity
from vibrosheet.errors import (
    AllFailed,
    EmptyResult,
    InvalidConfig,
    InvalidRange,
    NumericalBlowup,
    ParseError,
    SliceMismatch,
)
from vibrosheet.metrics import cost_of_transport, efficiency, stage_power
from vibrosheet.models import ActuationPattern, battery_label, parse_battery_label
from vibrosheet.output import write_csv_atomic
from vibrosheet.robot import compile_chain, validate, with_battery

if TYPE_CHECKING:
    from collections.abc import Callable
    from pathlib import Path

    from vibrosheet.checkpoint import CheckpointStore
    from vibrosheet.dynamics import Trajectory
    from vibrosheet.models import (
        BatteryPlacement,
        ContactParams,
        IntegratorParams,
        MeasurementProtocol,
        PowerModel,
        RobotConfig,
        SweepSpec,
    )
    from vibrosheet.robot import ChainModel

logger = logging.getLogger(__name__)

RESULT_HEADER = [
    "freq_hz",
    "phase_deg",
    "duty_left",
    "duty_right",
    "battery_pos",
    "velocity_mps",
    "power_w",
    "eff_cmspw",
    "cot",
    "failed",
]

Objective = Literal["max_velocity_left", "max_velocity_right", "max_efficiency", "min_cot"]
OBJECTIVES: tuple[Objective, ...] = ("max_velocity_left", "max_velocity_right", "max_efficiency", "min_cot")

Axis = Literal["freq", "phase", "duty_left", "duty_right"]
AXES: tuple[Axis, ...] = ("freq", "phase", "duty_left", "duty_right")
METRICS = ("velocity", "power", "efficiency", "cot")

CellKey = tuple[float, float, float, float]


@dataclass(frozen=True)
class SweepRecord:
    """Outcome of one (pattern, battery position) grid point."""

    pattern: ActuationPattern
    battery: BatteryPlacement
    velocity: float
    power: float
    efficiency: float
    cot: float
    failed: bool

    @property
    def key(self) -> CellKey:
        p = self.pattern
        return (p.frequency, p.phase_deg, p.duty_left, p.duty_right)

    def axis_value(self, axis: Axis) -> float:
        return self.key[AXES.index(axis)]

    def metric(self, name: str) -> float:
        return {
            "velocity": self.velocity,
            "power": self.power,
            "efficiency": self.efficiency,
            "cot": self.cot,
        }[name]

    def row(self) -> list[Any]:
        p = self.pattern
        return [
            p.frequency,
            p.phase_deg,
            p.duty_left,
            p.duty_right,
            battery_label(self.battery),
            self.velocity,
            self.power,
            self.efficiency,
            self.cot,
            int(self.failed),
        ]

    def to_dict(self) -> dict[str, Any]:
        return dict(zip(RESULT_HEADER, self.row()))


@dataclass
class SweepResult:
    """All records of a sweep plus the provenance needed to trust a resume."""

    records: list[SweepRecord]
    spec_hash: str = ""
    version: str = __version__

    def write_csv(self, path: Path) -> None:
        write_csv_atomic(path, RESULT_HEADER, (r.row() for r in self.records))

    def battery_positions(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(battery_label(r.battery), None)
        return list(seen)

    def velocity_cells(self, battery: str | None = None) -> dict[CellKey, float]:
        """Velocity per (f, Φ, D_L, D_R) cell in cm/s; failed points are NaN."""
        labels = self.battery_positions()
        if battery is None:
            if len(labels) > 1:
                raise SliceMismatch(f"Result holds battery positions {labels}; choose one")
            battery = labels[0] if labels else None
        return {
            r.key: (math.nan if r.failed else 100.0 * r.velocity)
            for r in self.records
            if battery_label(r.battery) == battery
        }


@dataclass
class HeatMap:
    """Rectangular slice of one metric over two grid axes."""

    row_axis: Axis
    col_axis: Axis
    row_values: list[float]
    col_values: list[float]
    values: npt.NDArray[np.float64]
    metric: str

    def header(self) -> list[str]:
        return [f"{self.row_axis}\\{self.col_axis}", *(str(c) for c in self.col_values)]

    def rows(self) -> list[list[float]]:
        return [[rv, *(float(v) for v in self.values[i])] for i, rv in enumerate(self.row_values)]

    def write_csv(self, path: Path) -> None:
        write_csv_atomic(path, self.header(), self.rows())


class _Job(NamedTuple):
    index: int
    robot: RobotConfig
    pattern: ActuationPattern
    protocol: MeasurementProtocol
    integ: IntegratorParams
    contacts: ContactParams
    power: PowerModel


def spec_hash(spec: SweepSpec) -> str:
    """Stable identity of a sweep's results: everything except the worker count, plus the engine version."""
    body = spec.model_dump_json(exclude={"workers"})
    return hashlib.sha256(f"{__version__}\n{body}".encode()).hexdigest()


def check_spec(spec: SweepSpec) -> list[str]:
    """Violations that make a sweep spec unrunnable (empty when valid)."""
    problems: list[str] = []
    for battery in spec.battery_positions or (spec.robot.battery_position,):
        for v in validate(with_battery(spec.robot, battery)):
            if f"robot.{v}" not in problems:
                problems.append(f"robot.{v}")
    grid = spec.grid
    if grid.size == 0:
        problems.append("grid: every axis needs at least one value")
    elif min(grid.freqs) > 0 and spec.protocol.measure * min(grid.freqs) < 10 - 1e-9:
        problems.append(
            f"protocol.measure: window {spec.protocol.measure:g} s is shorter than 10 periods "
            f"of the lowest frequency ({10 / min(grid.freqs):.6g} s)"
        )
    if not spec.battery_positions:
        problems.append("battery_positions: at least one position")
    if spec.workers < 1:
        problems.append("workers: must be >= 1")
    if spec.protocol.transient < 0:
        problems.append("protocol.transient: must be >= 0")
    return problems


@functools.lru_cache(maxsize=16)
def _compiled(robot: RobotConfig) -> ChainModel:
    return compile_chain(robot)


def run_protocol(
    chain: ChainModel,
    pattern: ActuationPattern,
    protocol: MeasurementProtocol,
    integ: IntegratorParams,
    contacts: ContactParams | None,
) -> tuple[Trajectory, float]:
    """Simulate transient + measurement window and return the trajectory with its steady-state velocity."""
    traj = simulate(chain, pattern, protocol.duration, integ, contacts, transient=protocol.transient)
    return traj, steady_state_velocity(traj, pattern)


def summarize(
    velocity: float, pattern: ActuationPattern, power_model: PowerModel, mass: float, gravity: float
) -> dict[str, float]:
    """Power, efficiency and COT for a measured velocity; undefined metrics are NaN."""
    power = stage_power(pattern, power_model)
    eff = efficiency(velocity, power) if power > 0 and math.isfinite(velocity) else math.nan
    cot = (
        cost_of_transport(power, mass, velocity, gravity) if velocity != 0 and math.isfinite(velocity) else math.nan
    )
    return {"velocity": velocity, "power": power, "efficiency": eff, "cot": cot}


def _evaluate(job: _Job) -> dict[str, Any]:
    chain = _compiled(job.robot)
    try:
        _, velocity = run_protocol(chain, job.pattern, job.protocol, job.integ, job.contacts)
    except NumericalBlowup as exc:
        power = stage_power(job.pattern, job.power)
        return {
            "velocity": math.nan,
            "power": power,
            "efficiency": math.nan,
            "cot": math.nan,
            "failed": True,
            "error": str(exc),
        }
    out: dict[str, Any] = summarize(velocity, job.pattern, job.power, chain.total_mass, job.integ.gravity)
    out["failed"] = False
    return out


def _record(pattern: ActuationPattern, battery: BatteryPlacement, raw: dict[str, Any]) -> SweepRecord:
    return SweepRecord(
        pattern=pattern,
        battery=battery,
        velocity=float(raw["velocity"]),
        power=float(raw["power"]),
        efficiency=float(raw["efficiency"]),
        cot=float(raw["cot"]),
        failed=bool(raw["failed"]),
    )


def run_sweep(
    spec: SweepSpec,
    *,
    checkpoint: CheckpointStore | None = None,
    resume: bool = False,
    progress: Callable[[int, int, bool], None] | None = None,
) -> SweepResult:
    """Simulate every (pattern, battery position) of the spec.

    With a checkpoint store each completed point is logged as it finishes; ``resume``
    reuses logged points of the same spec hash instead of recomputing them.
    """
    problems = check_spec(spec)
    if problems:
        raise InvalidConfig(f"Sweep spec has {len(problems)} problem(s): {problems[0]}", problems)
    g = spec.grid
    try:
        patterns = pattern_grid(g.freqs, g.phases, g.duties_left, g.duties_right)
    except InvalidRange as exc:
        raise InvalidConfig(f"Sweep grid out of range: {exc}", [str(exc)]) from exc

    digest = spec_hash(spec)
    batteries = spec.battery_positions
    jobs = [
        _Job(
            index=p_idx * len(batteries) + b_idx,
            robot=with_battery(spec.robot, battery),
            pattern=pattern,
            protocol=spec.protocol,
            integ=spec.integrator,
            contacts=spec.contacts,
            power=spec.power,
        )
        for p_idx, pattern in enumerate(patterns)
        for b_idx, battery in enumerate(batteries)
    ]
    for robot in {job.robot for job in jobs}:
        _compiled(robot)

    done: dict[int, dict[str, Any]] = {}
    if checkpoint is not None:
        if resume:
            done = {i: r for i, r in checkpoint.load().items() if i < len(jobs)}
            logger.info("resuming: %d of %d points already complete", len(done), len(jobs))
        else:
            checkpoint.clear()
    pending = [job for job in jobs if job.index not in done]
    total = len(jobs)
    completed = len(done)

    def finish(job: _Job, raw: dict[str, Any]) -> None:
        nonlocal completed
        done[job.index] = raw
        completed += 1
        if raw["failed"]:
            logger.warning("point %d (f=%g Hz) failed: %s", job.index, job.pattern.frequency, raw.get("error", ""))
        if checkpoint is not None:
            checkpoint.append(job.index, raw)
        if progress is not None:
            progress(completed, total, bool(raw["failed"]))

    if spec.workers == 1 or len(pending) <= 1:
        for job in pending:
            finish(job, _evaluate(job))
    else:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=spec.workers, mp_context=ctx) as pool:
            futures = {pool.submit(_evaluate, job): job for job in pending}
            for future in as_completed(futures):
                finish(futures[future], future.result())

    records = [_record(job.pattern, batteries[job.index % len(batteries)], done[job.index]) for job in jobs]
    return SweepResult(records=records, spec_hash=digest)


def best(result: SweepResult, objective: Objective) -> tuple[SweepRecord, float]:
    """Optimal record for an objective; ties go to the first record in grid order."""
    if not result.records:
        raise EmptyResult("Sweep result has no records")
    if objective not in OBJECTIVES:
        raise InvalidRange(f"Unknown objective {objective!r}; choose from {', '.join(OBJECTIVES)}")

    def candidate_value(r: SweepRecord) -> float | None:
        if r.failed:
            return None
        if objective in ("max_velocity_left", "max_velocity_right"):
            value = r.velocity
        elif objective == "max_efficiency":
            value = r.efficiency
        else:
            if r.velocity == 0:
                return None
            value = r.cot
        return value if math.isfinite(value) else None

    maximize = objective in ("max_velocity_left", "max_efficiency")
    chosen: tuple[SweepRecord, float] | None = None
    for r in result.records:
        value = candidate_value(r)
        if value is None:
            continue
        if chosen is None or (value > chosen[1] if maximize else value < chosen[1]):
            chosen = (r, value)
    if chosen is None:
        raise AllFailed(f"No record is eligible for {objective}")
    return chosen


def _match(values: list[float], target: float) -> float | None:
    for v in values:
        if math.isclose(v, target, rel_tol=0, abs_tol=1e-9):
            return v
    return None


def export_grid(
    result: SweepResult,
    axes: tuple[Axis, Axis] = ("duty_left", "duty_right"),
    fixed: dict[str, float] | None = None,
    metric: str = "velocity",
    battery: str | None = None,
) -> HeatMap:
    """Slice one metric over two axes with every other axis fixed.

    Raises SliceMismatch when the slice does not fix exactly the non-axis dimensions
    or names a value absent from the grid.
    """
    fixed = dict(fixed or {})
    row_axis, col_axis = axes
    if row_axis not in AXES or col_axis not in AXES or row_axis == col_axis:
        raise SliceMismatch(f"Axes must be two distinct names from {', '.join(AXES)}")
    if metric not in METRICS:
        raise SliceMismatch(f"Unknown metric {metric!r}; choose from {', '.join(METRICS)}")
    others = {a for a in AXES if a not in axes}
    if set(fixed) != others:
        raise SliceMismatch(f"Slice must fix exactly {sorted(others)}, got {sorted(fixed)}")

    labels = result.battery_positions()
    if battery is None:
        if len(labels) != 1:
            raise SliceMismatch(f"Result holds battery positions {labels}; choose one")
        battery = labels[0]
    elif battery not in labels:
        raise SliceMismatch(f"Battery position {battery!r} is not in the result")

    records = [r for r in result.records if battery_label(r.battery) == battery]
    for axis in AXES:
        if axis not in fixed:
            continue
        present = sorted({r.axis_value(axis) for r in records})
        value = _match(present, fixed[axis])
        if value is None:
            raise SliceMismatch(f"{axis} = {fixed[axis]:g} is not on the grid (values: {present})")
        records = [r for r in records if r.axis_value(axis) == value]

    row_values = sorted({r.axis_value(row_axis) for r in records})
    col_values = sorted({r.axis_value(col_axis) for r in records})
    values = np.full((len(row_values), len(col_values)), math.nan)
    for r in records:
        i = row_values.index(r.axis_value(row_axis))
        j = col_values.index(r.axis_value(col_axis))
        values[i, j] = math.nan if r.failed else r.metric(metric)
    return HeatMap(row_axis, col_axis, row_values, col_values, values, metric)


def load_result_csv(path: Path) -> SweepResult:
    """Rebuild a SweepResult from a result CSV written by :meth:`SweepResult.write_csv`."""
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ParseError(f"file not found: {path}", line=0) from exc
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header != RESULT_HEADER:
        raise ParseError(f"expected header {','.join(RESULT_HEADER)}", line=1)
    records = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(RESULT_HEADER):
            raise ParseError(f"expected {len(RESULT_HEADER)} fields, got {len(row)}", line=line_no)
        try:
            f, phase, d_l, d_r = (float(x) for x in row[:4])
            pattern = ActuationPattern(frequency=f, phase_deg=phase, duty_left=d_l, duty_right=d_r)
            battery = parse_battery_label(row[4])
            v, p, e, c = (float(x) for x in row[5:9])
            failed = row[9].strip() not in ("0", "false", "False", "")
        except ValueError as exc:
            raise ParseError(str(exc), line=line_no) from exc
        records.append(SweepRecord(pattern, battery, v, p, e, c, failed))
    return SweepResult(records=records)
