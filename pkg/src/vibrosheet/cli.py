"""CLI entry point for vibrosheet: sheet-robot simulation, pattern sweeps and sim-vs-experiment comparison."""

from __future__ import annotations

import functools
import hashlib
import logging
import time
from pathlib import Path
from typing import TYPE_CHECKING, Any, NoReturn

import click

from vibrosheet import __version__
from vibrosheet.config import Settings, find_config, load_robot_config, load_settings, load_sweep_spec
from vibrosheet.errors import EXIT_USAGE, InvalidConfig, InvalidRange, VibroError, output_error
from vibrosheet.models import (
    ActuationPattern,
    ContactParams,
    IntegratorParams,
    MeasurementProtocol,
    PowerModel,
    RunManifest,
    parse_battery_label,
)
from vibrosheet.output import render, write_json_atomic

if TYPE_CHECKING:
    from collections.abc import Callable

    from pydantic import BaseModel

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Shared output options decorator
# ---------------------------------------------------------------------------


def output_options(f: Callable[..., Any]) -> Callable[..., Any]:
    """Shared decorator that adds --format, --json, --fields, --jq to a command."""

    @click.option(
        "--format", "fmt", type=click.Choice(["table", "json", "jsonl", "csv"]), default=None, help="Output format."
    )
    @click.option("--json", "json_flag", is_flag=True, help="Shortcut for --format json.")
    @click.option("--fields", "fields_str", default=None, help="Comma-separated field list.")
    @click.option("--jq", "jq_expr", default=None, help="jq expression for filtering.")
    @functools.wraps(f)
    def wrapper(
        *args: Any,
        fmt: str | None,
        json_flag: bool,
        fields_str: str | None,
        jq_expr: str | None,
        **kwargs: Any,
    ) -> Any:
        if json_flag:
            fmt = "json"
        if fmt is None:
            fmt = _settings().output_format
        fields = [s.strip() for s in fields_str.split(",")] if fields_str else None
        kwargs["fmt"] = fmt
        kwargs["fields"] = fields
        kwargs["jq_expr"] = jq_expr
        return f(*args, **kwargs)

    return wrapper


def vibro_output(
    data: Any,
    fmt: str = "table",
    fields: list[str] | None = None,
    jq_expr: str | None = None,
    columns: list[str] | None = None,
) -> None:
    """Render data to stdout."""
    click.echo(render(data, fmt=fmt, fields=fields, jq_expr=jq_expr, columns=columns))


def _fail(exc: VibroError) -> NoReturn:
    violations = exc.violations if isinstance(exc, InvalidConfig) else None
    output_error(exc.error_type, str(exc), exc.suggestions or None, exc.exit_code, violations)


def _settings() -> Settings:
    ctx = click.get_current_context(silent=True)
    if ctx is not None:
        root = ctx.find_root()
        if isinstance(root.obj, dict) and "settings" in root.obj:
            settings: Settings = root.obj["settings"]
            return settings
    return load_settings()


def _configure_logging(verbose: bool) -> None:
    """Route package logs to a Rich handler on stderr."""
    from rich.console import Console
    from rich.logging import RichHandler

    pkg_logger = logging.getLogger("vibrosheet")
    for handler in list(pkg_logger.handlers):
        pkg_logger.removeHandler(handler)
    pkg_logger.addHandler(RichHandler(console=Console(stderr=True), show_path=False, show_time=False))
    pkg_logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


def _digest(*models: BaseModel) -> str:
    body = "\n".join(m.model_dump_json() for m in models)
    return hashlib.sha256(f"{__version__}\n{body}".encode()).hexdigest()


def _write_manifest(path: Path, command: str, digest: str, started: float, outputs: list[Path]) -> None:
    manifest = RunManifest(
        command=command,
        spec_hash=digest,
        version=__version__,
        wall_time_s=round(time.monotonic() - started, 3),
        outputs=tuple(str(p) for p in outputs),
    )
    write_json_atomic(path, manifest.model_dump())


def _build_usage_contract() -> str:
    """Machine-facing summary appended to --help."""
    config = find_config()
    settings_line = str(config) if config else "(none: built-in defaults)"
    return f"""\
--- Contract ---
Settings file: {settings_line}
Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
Errors: one JSON object on stderr, {{"error": {{"type", "message", "suggestions"?, "violations"?}}}}.
Output: --format table|json|jsonl|csv, --json, --fields a,b, --jq EXPR on every command.
Precedence: flags > robot/sweep file > $VIBROSHEET_WORKERS > settings TOML > defaults.
Sign convention: velocity is positive when the robot moves towards its left end.
---"""


class VibroGroup(click.Group):
    """Click group that reports usage errors with exit code 1 and appends the contract to --help."""

    def make_context(
        self,
        info_name: str | None,
        args: list[str],
        parent: click.Context | None = None,
        **extra: Any,
    ) -> click.Context:
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def format_help(self, ctx: click.Context, formatter: click.HelpFormatter) -> None:
        super().format_help(ctx, formatter)
        formatter.write("\n")
        try:
            formatter.write(_build_usage_contract())
        except VibroError:
            formatter.write("--- Contract ---\n(could not resolve settings file)\n---")
        formatter.write("\n")


@click.group(cls=VibroGroup, invoke_without_command=True)
@click.version_option(__version__, prog_name="vibrosheet")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging on stderr.")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """vibrosheet: planar sheet-robot simulator and actuation-pattern optimizer."""
    ctx.ensure_object(dict)
    _configure_logging(verbose)
    try:
        ctx.obj["settings"] = load_settings()
    except VibroError as e:
        _fail(e)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

SUMMARY_COLUMNS = ["velocity_mps", "velocity_cms", "power_w", "eff_cmspw", "cot", "mass_kg", "simulated_s"]


@cli.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True, help="Robot JSON file.")
@click.option("--freq", type=float, required=True, help="Drive frequency (Hz, 0 < f <= 30).")
@click.option("--phase", type=float, default=0.0, show_default=True, help="Right-channel lag (deg).")
@click.option("--duty-left", type=float, default=0.0, show_default=True, help="Left duty ratio (0-1).")
@click.option("--duty-right", type=float, default=0.0, show_default=True, help="Right duty ratio (0-1).")
@click.option("--v-high", type=float, default=300.0, show_default=True, help="High drive level (V).")
@click.option("--rise-time", type=float, default=0.002, show_default=True, help="Edge ramp up (s).")
@click.option("--fall-time", type=float, default=0.002, show_default=True, help="Edge ramp down (s).")
@click.option("--battery", default=None, help="Override battery placement: P1, P2, P3 or custom:i+j.")
@click.option("--dt", type=float, default=None, help="Integrator step (s). Default from settings (1e-4).")
@click.option("--stride", type=int, default=None, help="Sample every N steps. Default from settings (10).")
@click.option("--transient", type=float, default=None, help="Settling time before measuring (s).")
@click.option("--measure", type=float, default=None, help="Measurement window (s).")
@click.option("--no-contact", is_flag=True, help="Remove the ground (vacuum run).")
@click.option("--output", type=click.Path(path_type=Path), default=None, help="Trajectory CSV path.")
@output_options
def simulate(
    config_path: Path,
    freq: float,
    phase: float,
    duty_left: float,
    duty_right: float,
    v_high: float,
    rise_time: float,
    fall_time: float,
    battery: str | None,
    dt: float | None,
    stride: int | None,
    transient: float | None,
    measure: float | None,
    no_contact: bool,
    output: Path | None,
    fmt: str,
    fields: list[str] | None,
    jq_expr: str | None,
) -> None:
    """Simulate one actuation pattern and print velocity, power, efficiency and COT."""
    from vibrosheet.actuation import check_pattern
    from vibrosheet.robot import compile_chain, with_battery
    from vibrosheet.sweep import run_protocol, summarize

    settings = _settings()
    started = time.monotonic()
    try:
        robot = load_robot_config(config_path)
        if battery:
            try:
                robot = with_battery(robot, parse_battery_label(battery))
            except ValueError as exc:
                raise InvalidRange(f"Unknown battery placement {battery!r}") from exc
        chain = compile_chain(robot)
        pattern = ActuationPattern(
            frequency=freq,
            phase_deg=phase,
            duty_left=duty_left,
            duty_right=duty_right,
            v_high=v_high,
            rise_time=rise_time,
            fall_time=fall_time,
        )
        check_pattern(pattern)
        integ = IntegratorParams(
            dt=dt if dt is not None else settings.dt,
            sample_stride=stride if stride is not None else settings.sample_stride,
        )
        protocol = MeasurementProtocol(
            transient=transient if transient is not None else settings.transient,
            measure=measure if measure is not None else settings.measure,
        )
        contacts = None if no_contact else ContactParams()
        power = PowerModel()

        traj, velocity = run_protocol(chain, pattern, protocol, integ, contacts)
        metrics = summarize(velocity, pattern, power, chain.total_mass, integ.gravity)
        outputs: list[Path] = []
        if output is not None:
            traj.write_csv(output)
            outputs.append(output)
            digest = _digest(robot, pattern, integ, protocol, contacts or ContactParams(), power)
            _write_manifest(output.with_name(f"{output.stem}.manifest.json"), "simulate", digest, started, outputs)
    except VibroError as e:
        _fail(e)

    summary = {
        "velocity_mps": metrics["velocity"],
        "velocity_cms": 100.0 * metrics["velocity"],
        "power_w": metrics["power"],
        "eff_cmspw": metrics["efficiency"],
        "cot": metrics["cot"],
        "mass_kg": chain.total_mass,
        "simulated_s": protocol.duration,
        "samples": len(traj),
        "trajectory": str(output) if output else None,
    }
    vibro_output(summary, fmt, fields, jq_expr, columns=SUMMARY_COLUMNS if fmt == "table" else None)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

RESULTS_NAME = "results.csv"
MANIFEST_NAME = "manifest.json"
OPTIMUM_COLUMNS = ["objective", "freq_hz", "phase_deg", "duty_left", "duty_right", "battery_pos", "value"]


@cli.command()
@click.option("--spec", "spec_path", type=click.Path(path_type=Path), required=True, help="Sweep spec JSON file.")
@click.option("--output-dir", type=click.Path(path_type=Path), required=True, help="Directory for results.")
@click.option("--workers", type=int, default=None, help="Worker processes (default: spec, $VIBROSHEET_WORKERS, 1).")
@click.option("--resume", is_flag=True, help="Reuse completed points logged for the same spec.")
@output_options
def sweep(
    spec_path: Path,
    output_dir: Path,
    workers: int | None,
    resume: bool,
    fmt: str,
    fields: list[str] | None,
    jq_expr: str | None,
) -> None:
    """Run a pattern sweep, write results.csv and print the optimum for every objective."""
    from vibrosheet.checkpoint import CheckpointStore
    from vibrosheet.errors import AllFailed
    from vibrosheet.models import battery_label
    from vibrosheet.progress import make_agent_progress_callback, make_human_progress_callback
    from vibrosheet.sweep import OBJECTIVES, best, run_sweep, spec_hash

    settings = _settings()
    started = time.monotonic()
    try:
        spec = load_sweep_spec(spec_path)
        if workers is None:
            workers = spec.workers if "workers" in spec.model_fields_set else settings.workers
        if workers < 1:
            raise InvalidRange(f"--workers must be >= 1, got {workers}")
        spec = spec.model_copy(update={"workers": workers})
        digest = spec_hash(spec)
        store = CheckpointStore(output_dir, digest)
        progress = make_human_progress_callback() if fmt == "table" else make_agent_progress_callback()
        result = run_sweep(spec, checkpoint=store, resume=resume, progress=progress)
        results_path = output_dir / RESULTS_NAME
        result.write_csv(results_path)
        _write_manifest(output_dir / MANIFEST_NAME, "sweep", digest, started, [results_path])
    except VibroError as e:
        _fail(e)

    optima: list[dict[str, Any]] = []
    for objective in OBJECTIVES:
        try:
            record, value = best(result, objective)
        except AllFailed:
            optima.append({"objective": objective, "value": None})
            continue
        p = record.pattern
        optima.append(
            {
                "objective": objective,
                "freq_hz": p.frequency,
                "phase_deg": p.phase_deg,
                "duty_left": p.duty_left,
                "duty_right": p.duty_right,
                "battery_pos": battery_label(record.battery),
                "value": value,
            }
        )
    vibro_output(optima, fmt, fields, jq_expr, columns=OPTIMUM_COLUMNS)


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

ERROR_MAP_NAME = "error_map.csv"
HISTOGRAM_NAME = "rmse_histogram.csv"


@cli.command()
@click.argument("sim_csv", type=click.Path(path_type=Path))
@click.argument("exp_csv", type=click.Path(path_type=Path))
@click.option("--output-dir", type=click.Path(path_type=Path), required=True, help="Directory for the CSVs.")
@click.option("--bin-width", type=float, default=0.1, show_default=True, help="RMSE histogram bin width (cm/s).")
@click.option("--battery", default=None, help="Battery position to compare when a file holds several.")
@output_options
def compare(
    sim_csv: Path,
    exp_csv: Path,
    output_dir: Path,
    bin_width: float,
    battery: str | None,
    fmt: str,
    fields: list[str] | None,
    jq_expr: str | None,
) -> None:
    """Per-(frequency, phase) RMSE/PCC between a simulated and a measured velocity grid."""
    from vibrosheet.compare import error_maps, histogram, load_experiment, write_error_map, write_histogram

    started = time.monotonic()
    try:
        sim = load_experiment(sim_csv, battery)
        exp = load_experiment(exp_csv, battery)
        cells = error_maps(sim, exp)
        bins = histogram([c.rmse_cms for c in cells], bin_width)
        map_path, hist_path = output_dir / ERROR_MAP_NAME, output_dir / HISTOGRAM_NAME
        write_error_map(cells, map_path)
        write_histogram(bins, hist_path)
        digest = hashlib.sha256(sim_csv.read_bytes() + b"\0" + exp_csv.read_bytes()).hexdigest()
        _write_manifest(output_dir / MANIFEST_NAME, "compare", digest, started, [map_path, hist_path])
    except VibroError as e:
        _fail(e)

    vibro_output([c.to_dict() for c in cells], fmt, fields, jq_expr)


# ---------------------------------------------------------------------------
# heatmap
# ---------------------------------------------------------------------------


def _parse_fix(values: tuple[str, ...]) -> dict[str, float]:
    fixed: dict[str, float] = {}
    for item in values:
        name, sep, raw = item.partition("=")
        if not sep:
            raise InvalidRange(f"--fix expects axis=value, got {item!r}")
        try:
            fixed[name.strip()] = float(raw)
        except ValueError as exc:
            raise InvalidRange(f"--fix value for {name!r} is not a number: {raw!r}") from exc
    return fixed


@cli.command()
@click.argument("result_csv", type=click.Path(path_type=Path))
@click.option("--rows", "row_axis", type=click.Choice(["freq", "phase", "duty_left", "duty_right"]), default="duty_left")
@click.option(
    "--cols", "col_axis", type=click.Choice(["freq", "phase", "duty_left", "duty_right"]), default="duty_right"
)
@click.option("--fix", "fix", multiple=True, help="Fixed axis value, e.g. --fix freq=16 --fix phase=72.")
@click.option(
    "--metric", type=click.Choice(["velocity", "power", "efficiency", "cot"]), default="velocity", show_default=True
)
@click.option("--battery", default=None, help="Battery position when the result holds several.")
@click.option("--output", type=click.Path(path_type=Path), default=None, help="Heat-map CSV path.")
@output_options
def heatmap(
    result_csv: Path,
    row_axis: str,
    col_axis: str,
    fix: tuple[str, ...],
    metric: str,
    battery: str | None,
    output: Path | None,
    fmt: str,
    fields: list[str] | None,
    jq_expr: str | None,
) -> None:
    """Slice a sweep result into a two-axis table of one metric."""
    from vibrosheet.sweep import export_grid, load_result_csv

    try:
        result = load_result_csv(result_csv)
        grid = export_grid(result, (row_axis, col_axis), _parse_fix(fix), metric, battery)  # type: ignore[arg-type]
        if output is not None:
            grid.write_csv(output)
    except VibroError as e:
        _fail(e)

    header = grid.header()
    rows = [dict(zip(header, row)) for row in grid.rows()]
    vibro_output(rows, fmt, fields, jq_expr, columns=header)


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


@cli.command("validate")
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True, help="Robot JSON file.")
@output_options
def validate_command(config_path: Path, fmt: str, fields: list[str] | None, jq_expr: str | None) -> None:
    """Check a robot description and list every violated invariant."""
    from vibrosheet.robot import compile_chain, validate

    try:
        robot = load_robot_config(config_path)
        violations = validate(robot)
        if violations:
            raise InvalidConfig(
                f"{config_path}: {len(violations)} violation(s)",
                [str(v) for v in violations],
            )
        chain = compile_chain(robot)
    except VibroError as e:
        _fail(e)

    vibro_output(
        {
            "valid": True,
            "links": chain.n_links,
            "joints": chain.n_joints,
            "feet": len(chain.feet),
            "mass_kg": chain.total_mass,
            "body_length_m": chain.body_length,
        },
        fmt,
        fields,
        jq_expr,
    )
