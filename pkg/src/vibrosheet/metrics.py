"""Power model, locomotion efficiency, cost of transport and error statistics."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from vibrosheet.errors import DegenerateSeries, EmptySeries, LengthMismatch, ZeroPower, ZeroVelocity
from vibrosheet.models import PowerModel

if TYPE_CHECKING:
    from collections.abc import Sequence

    from vibrosheet.models import ActuationPattern

# Published operating point of the prototype: stage power (W), mass (kg), speed (m/s).
PROTOTYPE_COT_POINT = (0.46, 0.0445, 0.029)
PROTOTYPE_MAX_EFFICIENCY = 9.5
# Simulation-vs-experiment agreement reported for the best-matching (f, Φ) cell.
REFERENCE_RMSE_CMS = 0.59
REFERENCE_PCC = 0.8

GRAVITY = 9.8


def stage_power(pattern: ActuationPattern, pm: PowerModel) -> float:
    """Drive-stage power P = quiescent + slope·(D_L + D_R), in W."""
    return pm.stage_quiescent + pm.per_duty_slope * (pattern.duty_left + pattern.duty_right)


def stage_power_from_current(current: float, pm: PowerModel) -> float:
    """Stage power from a measured battery current: I·V_batt minus the compute load."""
    return current * pm.battery_voltage - pm.compute_power


def fit_power_model(
    patterns: Sequence[ActuationPattern],
    powers: Sequence[float],
    base: PowerModel | None = None,
) -> PowerModel:
    """Least-squares fit of quiescent power and per-duty slope to measured stage powers.

    A single measurement fixes the slope through the origin (quiescent 0).
    """
    if len(patterns) != len(powers):
        raise LengthMismatch(f"{len(patterns)} patterns but {len(powers)} power readings")
    if not patterns:
        raise EmptySeries("No measurements to fit")
    base = base or PowerModel()
    duty = np.array([p.duty_left + p.duty_right for p in patterns], dtype=float)
    power = np.asarray(powers, dtype=float)
    if len(patterns) == 1 or np.ptp(duty) == 0:
        if not np.any(duty):
            raise DegenerateSeries("All measurements have zero total duty; slope is undefined")
        slope = float(np.dot(duty, power) / np.dot(duty, duty))
        return base.model_copy(update={"stage_quiescent": 0.0, "per_duty_slope": slope})
    slope, quiescent = np.polyfit(duty, power, 1)
    return base.model_copy(update={"stage_quiescent": float(quiescent), "per_duty_slope": float(slope)})


def efficiency(velocity: float, power: float) -> float:
    """Locomotion efficiency in cm/s per W: 100·|v| / P."""
    if not power > 0:
        raise ZeroPower(f"Efficiency needs positive power, got {power!r} W")
    return 100.0 * abs(velocity) / power


def cost_of_transport(power: float, mass: float, velocity: float, gravity: float = GRAVITY) -> float:
    """COT = P / (m·g·|v|)."""
    if velocity == 0:
        raise ZeroVelocity("Cost of transport is undefined for a stationary robot")
    return power / (mass * gravity * abs(velocity))


def _paired(x: Sequence[float], y: Sequence[float]) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    if len(x) != len(y):
        raise LengthMismatch(f"Series lengths differ: {len(x)} vs {len(y)}")
    if len(x) == 0:
        raise EmptySeries("Series are empty")
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def rmse(x: Sequence[float], y: Sequence[float]) -> float:
    """Root-mean-square difference of two equal-length series."""
    a, b = _paired(x, y)
    return math.sqrt(float(np.mean((a - b) ** 2)))


def pcc(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation coefficient of two equal-length series (length ≥ 2)."""
    a, b = _paired(x, y)
    if len(a) < 2:
        raise DegenerateSeries("Correlation needs at least two points")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise DegenerateSeries("Correlation is undefined for a constant series")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = float(np.dot(da, da)), float(np.dot(db, db))
    r = float(np.dot(da, db)) / math.sqrt(sa * sb)
    return max(-1.0, min(1.0, r))
