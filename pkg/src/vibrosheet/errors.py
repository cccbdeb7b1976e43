"""Exception hierarchy and structured error output."""

from __future__ import annotations

import json
import sys
from typing import TYPE_CHECKING, NoReturn

if TYPE_CHECKING:
    from collections.abc import Sequence

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class VibroError(Exception):
    """Base exception for all vibrosheet errors."""

    error_type: str = "vibro_error"
    suggestions: list[str] = []
    exit_code: int = EXIT_USAGE

    def __init__(self, message: str, suggestions: list[str] | None = None) -> None:
        super().__init__(message)
        if suggestions is not None:
            self.suggestions = suggestions


class ConfigError(VibroError):
    """Missing or unreadable configuration file."""

    error_type = "config_error"
    suggestions = [
        "Check the path passed to --config / --spec",
        "Or set VIBROSHEET_CONFIG to a settings TOML file",
    ]


class InvalidConfig(VibroError):
    """Robot or sweep description violates its schema or invariants."""

    error_type = "invalid_config"
    suggestions = ["Run `vibrosheet validate --config <file>` to list every violation"]

    def __init__(self, message: str, violations: Sequence[str] = (), suggestions: list[str] | None = None) -> None:
        super().__init__(message, suggestions)
        self.violations = list(violations)


class InvalidRange(VibroError):
    """A numeric argument lies outside its allowed range."""

    error_type = "invalid_range"


class NumericalBlowup(VibroError):
    """Integrator state became non-finite or left the plausible workspace."""

    error_type = "numerical_blowup"
    exit_code = EXIT_NUMERICAL
    suggestions = [
        "Reduce --dt (1e-4 s resolves the default contact stiffness)",
        "Check materials.voltage_torque_gain and torsional_stiffness for implausible values",
    ]

    def __init__(self, message: str, time: float, suggestions: list[str] | None = None) -> None:
        super().__init__(message, suggestions)
        self.time = time


class WindowTooShort(VibroError):
    """Measurement window covers fewer than the required number of drive periods."""

    error_type = "window_too_short"
    suggestions = ["Lengthen the measurement window to at least 10 drive periods"]


class ZeroPower(VibroError):
    """Efficiency requested for a non-positive power."""

    error_type = "zero_power"


class ZeroVelocity(VibroError):
    """Cost of transport requested for a stationary robot."""

    error_type = "zero_velocity"


class LengthMismatch(VibroError):
    """Two series that must be paired have different lengths."""

    error_type = "length_mismatch"


class EmptySeries(VibroError):
    """A statistic was requested over an empty series."""

    error_type = "empty_series"


class DegenerateSeries(VibroError):
    """Correlation is undefined because a series has zero variance."""

    error_type = "degenerate_series"


class EmptyResult(VibroError):
    """Sweep result has no records."""

    error_type = "empty_result"


class AllFailed(VibroError):
    """No sweep record is eligible for the requested objective."""

    error_type = "all_failed"


class SliceMismatch(VibroError):
    """Heat-map slice does not match the sweep grid."""

    error_type = "slice_mismatch"


class ParseError(VibroError):
    """Malformed grid file."""

    error_type = "parse_error"

    def __init__(self, message: str, line: int, suggestions: list[str] | None = None) -> None:
        super().__init__(f"line {line}: {message}", suggestions)
        self.line = line


class AxisMismatch(VibroError):
    """Grid file has duplicate or inconsistent axis cells."""

    error_type = "axis_mismatch"


class GridMismatch(VibroError):
    """Simulation and experiment grids do not cover the same duty cells."""

    error_type = "grid_mismatch"


def output_error(
    error_type: str,
    message: str,
    suggestions: list[str] | None = None,
    exit_code: int = EXIT_USAGE,
    violations: list[str] | None = None,
) -> NoReturn:
    """Write a structured error to stderr and exit."""
    err: dict[str, dict[str, str | list[str]]] = {"error": {"type": error_type, "message": message}}
    if suggestions:
        err["error"]["suggestions"] = suggestions
    if violations:
        err["error"]["violations"] = violations
    print(json.dumps(err, ensure_ascii=False), file=sys.stderr)
    sys.exit(exit_code)
