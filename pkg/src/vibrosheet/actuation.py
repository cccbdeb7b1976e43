"""Two-channel drive waveforms: frequency, phase lag and duty ratio with linear edge ramps."""

from __future__ import annotations

import itertools
import math
from typing import TYPE_CHECKING, Literal

from vibrosheet.errors import InvalidRange
from vibrosheet.models import ActuationPattern

if TYPE_CHECKING:
    from collections.abc import Iterable

Channel = Literal["left", "right"]

MAX_FREQUENCY = 30.0
CYCLE_DIGITS = 9

# Grid axes of the prototype's sweep studies.
SWEEP_FREQS: tuple[float, ...] = tuple(float(f) for f in range(8, 27, 2))
SWEEP_PHASES: tuple[float, ...] = tuple(float(p) for p in range(0, 360, 36))
SWEEP_DUTIES: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(10))
SINGLE_ACTUATOR_DUTIES: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(1, 10))


def check_pattern(pattern: ActuationPattern) -> None:
    """Raise InvalidRange when a pattern field lies outside its allowed range."""
    if not (math.isfinite(pattern.frequency) and 0 < pattern.frequency <= MAX_FREQUENCY):
        raise InvalidRange(f"frequency must be in (0, {MAX_FREQUENCY:g}] Hz, got {pattern.frequency!r}")
    if not (math.isfinite(pattern.phase_deg) and 0 <= pattern.phase_deg < 360):
        raise InvalidRange(f"phase_deg must be in [0, 360), got {pattern.phase_deg!r}")
    for name in ("duty_left", "duty_right"):
        value = getattr(pattern, name)
        if not (math.isfinite(value) and 0 <= value <= 1):
            raise InvalidRange(f"{name} must be in [0, 1], got {value!r}")
    if not (math.isfinite(pattern.v_high) and pattern.v_high >= 0):
        raise InvalidRange(f"v_high must be >= 0, got {pattern.v_high!r}")
    if not (pattern.rise_time >= 0 and pattern.fall_time >= 0):
        raise InvalidRange("rise_time and fall_time must be >= 0")


def _unit_wave(tau: float, duty: float, rise: float, fall: float) -> float:
    """Normalised waveform in [0, 1] at cycle fraction ``tau`` ∈ [0, 1); ramps in cycles."""
    if duty <= 0:
        return 0.0
    if duty >= 1:
        return 1.0

    def rising(s: float) -> float:
        if s < 0 or s >= duty:
            return 0.0
        return 1.0 if rise <= 0 else min(1.0, s / rise)

    # ramp-down starts from whatever level the ramp-up reached by the falling edge
    level = 1.0 if rise <= 0 else min(1.0, duty / rise)

    def falling(s: float) -> float:
        if s < duty:
            return 0.0
        if fall <= 0:
            return 0.0
        return max(0.0, level - (s - duty) / fall)

    return max(rising(tau), falling(tau), falling(tau + 1.0))


def voltage_at(pattern: ActuationPattern, channel: Channel, t: float) -> float:
    """Drive voltage of one channel at time ``t``.

    Left is high on ``[nT, nT + D_L·T)``; right has the same shape with duty D_R,
    delayed by ``Φ/360 · T``. Edges ramp linearly over ``rise_time``/``fall_time``.
    """
    f = pattern.frequency
    if channel == "left":
        duty, cycles = pattern.duty_left, t * f
    else:
        duty, cycles = pattern.duty_right, t * f - pattern.phase_deg / 360.0
    # t and t + nT land on the same fraction once float noise in t·f is rounded away
    tau = round(cycles - math.floor(cycles), CYCLE_DIGITS) % 1.0
    return pattern.v_high * _unit_wave(tau, duty, pattern.rise_time * f, pattern.fall_time * f)


def pattern_grid(
    freqs: Iterable[float],
    phases: Iterable[float],
    duties_left: Iterable[float],
    duties_right: Iterable[float],
    **waveform: float,
) -> list[ActuationPattern]:
    """Cartesian product of the axes in (frequency, phase, duty_left, duty_right) order.

    Extra keyword arguments (v_high, rise_time, fall_time) apply to every pattern.
    """
    axes = [tuple(freqs), tuple(phases), tuple(duties_left), tuple(duties_right)]
    for name, axis in zip(("freqs", "phases", "duties_left", "duties_right"), axes):
        if not axis:
            raise InvalidRange(f"{name} must not be empty")
    patterns = []
    for f, phase, d_l, d_r in itertools.product(*axes):
        pattern = ActuationPattern(
            frequency=f, phase_deg=phase, duty_left=d_l, duty_right=d_r, **waveform
        )
        check_pattern(pattern)
        patterns.append(pattern)
    return patterns


def dual_actuator_grid() -> list[ActuationPattern]:
    """Full two-actuator study grid: 10 frequencies × 10 phases × 10 × 10 duties."""
    return pattern_grid(SWEEP_FREQS, SWEEP_PHASES, SWEEP_DUTIES, SWEEP_DUTIES)


def single_actuator_grid(side: Channel = "left") -> list[ActuationPattern]:
    """One actuator driven, the other idle: 10 frequencies × 9 duties."""
    if side == "left":
        return pattern_grid(SWEEP_FREQS, (0.0,), SINGLE_ACTUATOR_DUTIES, (0.0,))
    return pattern_grid(SWEEP_FREQS, (0.0,), (0.0,), SINGLE_ACTUATOR_DUTIES)


def mirror_pattern(pattern: ActuationPattern) -> ActuationPattern:
    """Swap the channels: (D_L, Φ) ↔ (D_R, −Φ mod 360)."""
    return pattern.model_copy(
        update={
            "duty_left": pattern.duty_right,
            "duty_right": pattern.duty_left,
            "phase_deg": (-pattern.phase_deg) % 360.0,
        }
    )
