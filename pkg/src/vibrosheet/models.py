"""Pydantic models for robot descriptions, actuation patterns and run parameters.

All quantities are SI. Models are frozen and reject unknown keys, so a typo in a
robot or sweep file fails loudly instead of silently falling back to a default.
Domain invariants (positive stiffness, feet inside the body, ...) are not enforced
here: ``robot.validate`` reports them as data and the owning operations raise.
"""

from __future__ import annotations

import enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

# 300 V drive deflects each joint by 0.1 rad at k = 0.32 N·m/rad (≈1.0667e-4 N·m/V).
DEFAULT_VOLTAGE_TORQUE_GAIN = 0.032 / 300.0

PROTOTYPE_TOTAL_MASS = 0.0445
PROTOTYPE_BATTERY_MASS = 0.0124
DEFAULT_FOOT_MASS = 0.001
DEFAULT_CELL_SIZE = 0.01
DEFAULT_CELL_COUNT = 20
DEFAULT_BASE_CELL_MASS = (PROTOTYPE_TOTAL_MASS - PROTOTYPE_BATTERY_MASS - 2 * DEFAULT_FOOT_MASS) / DEFAULT_CELL_COUNT


class VibroModel(BaseModel):
    """Base model for all declarative inputs.

    - extra="forbid": unknown keys in a robot/sweep file are errors
    - frozen=True: configs are plain immutable data, safe to share across workers
    - populate_by_name=True: allows both alias and field name for construction
    """

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class MaterialParams(VibroModel):
    """Joint constants shared by every actuator joint."""

    torsional_stiffness: float = 0.32
    joint_damping: float = 5.0e-3
    voltage_torque_gain: float = DEFAULT_VOLTAGE_TORQUE_GAIN
    # Metadata only; the joint model uses torsional_stiffness directly.
    young_modulus_actuator: float = 30.0e9
    young_modulus_substrate: float = 190.0e9


class ActuatorSpec(VibroModel):
    """One piezoelectric actuator, discretised into rigid links."""

    length: float = 0.100
    links_per_actuator: int = 6
    width: float = 0.020
    drive_voltage: float = 300.0
    channel: Literal["left", "right"] | None = None


class WeightProfile(VibroModel):
    """Per-centimetre mass distribution along the body, excluding batteries and feet."""

    cell_masses: tuple[float, ...] = Field(default_factory=lambda: (DEFAULT_BASE_CELL_MASS,) * DEFAULT_CELL_COUNT)
    cell_size: float = DEFAULT_CELL_SIZE
    battery_mass: float = PROTOTYPE_BATTERY_MASS
    total_mass: float | None = PROTOTYPE_TOTAL_MASS


class FootSpec(VibroModel):
    """The pair of hard cylindrical feet under the body."""

    positions_along_body: tuple[float, ...] = (0.025, 0.175)
    radius: float = 0.005
    height: float = 0.010
    mass: float = DEFAULT_FOOT_MASS


class BatteryPosition(str, enum.Enum):
    """Named battery placements used in the weight-distribution study."""

    P1 = "P1"
    P2 = "P2"
    P3 = "P3"


class CustomBattery(VibroModel):
    """Battery mass spread evenly over an explicit set of cells."""

    custom: tuple[int, ...]


BatteryPlacement = BatteryPosition | CustomBattery


class RobotConfig(VibroModel):
    """Declarative description of a multi-actuator sheet robot."""

    actuators: tuple[ActuatorSpec, ...] = (ActuatorSpec(), ActuatorSpec())
    materials: MaterialParams = MaterialParams()
    weight: WeightProfile = Field(default_factory=WeightProfile, alias="weight_profile")
    feet: FootSpec = FootSpec()
    battery_position: BatteryPlacement = BatteryPosition.P1

    @property
    def body_length(self) -> float:
        return sum(a.length for a in self.actuators)


class ActuationPattern(VibroModel):
    """Two-channel square-wave drive: frequency, phase lag, duty ratios and edge ramps."""

    frequency: float
    phase_deg: float = 0.0
    duty_left: float = 0.0
    duty_right: float = 0.0
    v_high: float = 300.0
    rise_time: float = 0.002
    fall_time: float = 0.002

    @property
    def period(self) -> float:
        return 1.0 / self.frequency


class ContactParams(VibroModel):
    """Penalty ground contact with regularised Coulomb friction."""

    normal_stiffness: float = 5000.0
    normal_damping: float = 5.0
    friction_coefficient: float = 0.36
    stiction_velocity: float = 1.0e-3


class IntegratorParams(VibroModel):
    """Fixed-step integrator settings."""

    dt: float = 1.0e-4
    scheme: Literal["semi-implicit-euler"] = "semi-implicit-euler"
    gravity: float = 9.8
    sample_stride: int = 10


class MeasurementProtocol(VibroModel):
    """Settle for ``transient`` seconds, then measure velocity over ``measure`` seconds."""

    transient: float = 5.0
    measure: float = 5.0

    @property
    def duration(self) -> float:
        return self.transient + self.measure


class PowerModel(VibroModel):
    """Duty-proportional power-stage model, P = quiescent + slope·(D_L + D_R)."""

    stage_quiescent: float = 0.0
    per_duty_slope: float = 0.5111
    compute_power: float = 0.740
    battery_voltage: float = 7.4


class SweepGrid(VibroModel):
    """Axes of the actuation-pattern grid."""

    freqs: tuple[float, ...]
    phases: tuple[float, ...] = (0.0,)
    duties_left: tuple[float, ...] = (0.0,)
    duties_right: tuple[float, ...] = (0.0,)

    @property
    def size(self) -> int:
        return len(self.freqs) * len(self.phases) * len(self.duties_left) * len(self.duties_right)


class SweepSpec(VibroModel):
    """A complete, reproducible sweep job."""

    robot: RobotConfig = RobotConfig()
    grid: SweepGrid
    battery_positions: tuple[BatteryPlacement, ...] = (BatteryPosition.P1,)
    protocol: MeasurementProtocol = MeasurementProtocol()
    integrator: IntegratorParams = IntegratorParams()
    contacts: ContactParams = ContactParams()
    power: PowerModel = PowerModel()
    workers: int = 1


def battery_label(position: BatteryPlacement) -> str:
    """Short label used in CSV columns: ``P1`` or ``custom:0+1``."""
    if isinstance(position, BatteryPosition):
        return position.value
    return "custom:" + "+".join(str(c) for c in position.custom)


def parse_battery_label(label: str) -> BatteryPlacement:
    """Inverse of :func:`battery_label`."""
    if label.startswith("custom:"):
        body = label[len("custom:") :]
        cells = tuple(int(c) for c in body.split("+")) if body else ()
        return CustomBattery(custom=cells)
    return BatteryPosition(label)


class RunManifest(VibroModel):
    """Provenance written next to a command's outputs once they are complete."""

    command: str
    spec_hash: str
    version: str
    wall_time_s: float
    outputs: tuple[str, ...] = ()
