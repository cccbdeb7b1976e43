"""Shared test fixtures."""

from __future__ import annotations

import json
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import pytest
from click.testing import CliRunner

from vibrosheet.dynamics import Trajectory
from vibrosheet.models import IntegratorParams, MeasurementProtocol, RobotConfig
from vibrosheet.robot import compile_chain

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from vibrosheet.robot import ChainModel

FIXTURES = Path(__file__).parent / "fixtures"


def make_trajectory(
    time: Sequence[float],
    x_com: Sequence[float],
    transient: float = 0.0,
    n_joints: int = 1,
    n_feet: int = 2,
) -> Trajectory:
    """Synthetic trajectory with the given centre-of-mass track; other channels are zero."""
    t = np.asarray(time, dtype=float)
    n = len(t)
    return Trajectory(
        time=t,
        coords=np.zeros((n, n_joints + 3)),
        velocities=np.zeros((n, n_joints + 3)),
        joint_angles=np.zeros((n, n_joints)),
        x_com=np.asarray(x_com, dtype=float),
        z_com=np.zeros(n),
        foot_x=np.zeros((n, n_feet)),
        foot_normal=np.zeros((n, n_feet)),
        foot_tangential=np.zeros((n, n_feet)),
        transient=transient,
        dt=float(t[1] - t[0]) if n > 1 else 1.0e-4,
    )


@pytest.fixture(autouse=True)
def _isolated_settings(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep user settings files and env vars out of every test."""
    monkeypatch.delenv("VIBROSHEET_CONFIG", raising=False)
    monkeypatch.delenv("VIBROSHEET_WORKERS", raising=False)
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "xdg"))


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def default_config() -> RobotConfig:
    return RobotConfig()


@pytest.fixture
def default_chain(default_config: RobotConfig) -> ChainModel:
    return compile_chain(default_config)


@pytest.fixture
def fast_protocol() -> MeasurementProtocol:
    """Short protocol for plumbing tests: 0.2 s settle + 1 s window (16 periods at 16 Hz)."""
    return MeasurementProtocol(transient=0.2, measure=1.0)


@pytest.fixture
def fast_integrator() -> IntegratorParams:
    return IntegratorParams(dt=1.0e-4, sample_stride=20)


@pytest.fixture
def tmp_json(tmp_path: Path) -> Callable[[str, Any], Path]:
    """Write a JSON document under tmp_path and return its path."""

    def _write(name: str, data: Any) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data, indent=2))
        return path

    return _write
