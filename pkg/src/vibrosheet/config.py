"""Configuration: XDG-compliant settings discovery and robot/sweep file loading."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, TypeVar

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib  # type: ignore[import-not-found,unused-ignore]

from pydantic import ValidationError

from vibrosheet.errors import ConfigError, InvalidConfig
from vibrosheet.models import RobotConfig, SweepSpec

if TYPE_CHECKING:
    from vibrosheet.models import VibroModel

M = TypeVar("M", bound="VibroModel")

_PROJECT_CONFIG = "vibrosheet.toml"
_APP_DIR = "vibrosheet"
_XDG_CONFIG = "config.toml"

WORKERS_ENV = "VIBROSHEET_WORKERS"
CONFIG_ENV = "VIBROSHEET_CONFIG"


def find_config() -> Path | None:
    """Discover the run-settings file.

    Search order (first existing file wins):
    1. $VIBROSHEET_CONFIG env var (explicit override)
    2. vibrosheet.toml, walking up from CWD (project-local settings)
    3. $XDG_CONFIG_HOME/vibrosheet/config.toml (default ~/.config/)
    """
    env_path = os.environ.get(CONFIG_ENV)
    if env_path:
        p = Path(env_path)
        if not p.is_file():
            raise ConfigError(
                f"{CONFIG_ENV} points to missing file: {env_path}",
                suggestions=[f"Check the path or unset {CONFIG_ENV} to use auto-discovery"],
            )
        return p

    cwd = Path.cwd()
    for d in [cwd, *cwd.parents]:
        candidate = d / _PROJECT_CONFIG
        if candidate.is_file():
            return candidate

    xdg_home = os.environ.get("XDG_CONFIG_HOME")
    if xdg_home:
        xdg_path = Path(xdg_home) / _APP_DIR / _XDG_CONFIG
    else:
        xdg_path = Path.home() / ".config" / _APP_DIR / _XDG_CONFIG
    if xdg_path.is_file():
        return xdg_path

    return None


def load_config_toml(path: Path | None = None) -> dict[str, object]:
    """Load and return raw TOML settings dict. Empty dict if no file."""
    if path is None:
        path = find_config()
    if path is None:
        return {}
    with open(path, "rb") as f:
        result: dict[str, object] = tomllib.load(f)
        return result


@dataclass
class Settings:
    """Run defaults that CLI flags override."""

    workers: int = 1
    dt: float = 1.0e-4
    sample_stride: int = 10
    transient: float = 5.0
    measure: float = 5.0
    output_format: str = "table"


def _int_setting(raw: dict[str, object], key: str, default: int) -> int:
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"Setting '{key}' must be an integer, got {value!r}")
    return value


def _float_setting(raw: dict[str, object], key: str, default: float) -> float:
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigError(f"Setting '{key}' must be a number, got {value!r}")
    return float(value)


def load_settings() -> Settings:
    """Load settings from the settings TOML and environment.

    Worker priority: $VIBROSHEET_WORKERS env var > workers in settings TOML > 1.
    """
    raw = load_config_toml()
    defaults = Settings()
    settings = Settings(
        workers=_int_setting(raw, "workers", defaults.workers),
        dt=_float_setting(raw, "dt", defaults.dt),
        sample_stride=_int_setting(raw, "sample_stride", defaults.sample_stride),
        transient=_float_setting(raw, "transient", defaults.transient),
        measure=_float_setting(raw, "measure", defaults.measure),
        output_format=str(raw.get("output_format", defaults.output_format)),
    )
    env_workers = os.environ.get(WORKERS_ENV)
    if env_workers:
        try:
            settings.workers = int(env_workers)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env_workers!r}") from exc
    if settings.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {settings.workers}")
    return settings


def _load_json_model(path: Path, model: type[M], what: str) -> M:
    if not path.is_file():
        raise ConfigError(f"{what} file not found: {path}")
    try:
        return model.model_validate_json(path.read_text())
    except ValidationError as exc:
        violations = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()]
        raise InvalidConfig(f"Invalid {what} file {path}: {len(violations)} error(s)", violations) from exc


def load_robot_config(path: Path) -> RobotConfig:
    """Parse a robot description JSON file (unknown keys rejected)."""
    return _load_json_model(path, RobotConfig, "robot")


def load_sweep_spec(path: Path) -> SweepSpec:
    """Parse a sweep spec JSON file (same dialect as robot files)."""
    return _load_json_model(path, SweepSpec, "sweep spec")


def dump_robot_config(config: RobotConfig) -> str:
    """Serialise a robot description with its file-format key names."""
    return config.model_dump_json(by_alias=True, indent=2)
