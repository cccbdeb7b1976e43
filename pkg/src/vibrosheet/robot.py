"""Robot description validation and compilation into a simulatable link chain.

Each actuator is discretised into ``links_per_actuator`` short rigid links joined by
torsional spring-motor joints. Adjacent actuators share their junction link, so a
robot of n actuators with L links each compiles to ``n·L − (n − 1)`` links and
``n·(L − 1)`` joints (two actuators of six links: eleven links, ten joints).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

from vibrosheet.errors import InvalidConfig
from vibrosheet.models import (
    DEFAULT_BASE_CELL_MASS,
    DEFAULT_CELL_SIZE,
    DEFAULT_FOOT_MASS,
    ActuatorSpec,
    BatteryPosition,
    CustomBattery,
    FootSpec,
    RobotConfig,
    WeightProfile,
)

if TYPE_CHECKING:
    from vibrosheet.models import BatteryPlacement

logger = logging.getLogger(__name__)

Side = Literal["left", "right"]

MASS_TOLERANCE = 1e-9

# Cell sets for the three studied battery placements on the default 20-cell body.
# Only the qualitative layout is published: right actuator span, junction, left region.
_BATTERY_CELLS: dict[BatteryPosition, tuple[int, ...]] = {
    BatteryPosition.P1: (13, 14, 15, 16),
    BatteryPosition.P2: (9, 10, 11, 12),
    BatteryPosition.P3: (1, 2, 3, 4),
}


@dataclass(frozen=True)
class Violation:
    """One broken invariant in a robot description."""

    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


@dataclass(frozen=True)
class Link:
    """Rigid link: a slender rod with its mass at its midpoint."""

    length: float
    mass: float
    inertia: float
    start: float


@dataclass(frozen=True)
class Joint:
    """Torsional spring-motor joint between links ``link - 1`` and ``link``."""

    stiffness: float
    damping: float
    voltage_gain: float
    actuator: int
    channel: Side
    link: int
    max_voltage: float


@dataclass(frozen=True)
class Foot:
    """Hard cylinder hanging below its host link; contact happens at its lowest point."""

    link: int
    offset: float
    position: float
    radius: float
    height: float
    mass: float


@dataclass(frozen=True)
class ChainModel:
    """Compiled, immutable simulation object. Safe to share across concurrent runs."""

    links: tuple[Link, ...]
    joints: tuple[Joint, ...]
    feet: tuple[Foot, ...]
    total_mass: float
    body_length: float

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def joints_on(self, channel: Side) -> list[int]:
        """Indices of the joints driven by one channel."""
        return [i for i, j in enumerate(self.joints) if j.channel == channel]


def battery_cells(position: BatteryPlacement) -> tuple[int, ...]:
    """Cell indices carrying battery mass for a named or custom placement."""
    if isinstance(position, CustomBattery):
        return tuple(sorted(position.custom))
    return _BATTERY_CELLS[position]


def actuator_channels(actuators: tuple[ActuatorSpec, ...]) -> list[Side]:
    """Drive side per actuator: explicit ``channel``, else left half → left, right half → right."""
    n = len(actuators)
    left_count = (n + 1) // 2
    sides: list[Side] = []
    for i, spec in enumerate(actuators):
        if spec.channel is not None:
            sides.append(spec.channel)
        else:
            sides.append("left" if i < left_count else "right")
    return sides


def _finite(x: float) -> bool:
    return math.isfinite(x)


def validate(config: RobotConfig) -> list[Violation]:
    """Return every invariant violation in ``config``; empty when it can be compiled."""
    out: list[Violation] = []

    if not config.actuators:
        out.append(Violation("actuators", "at least one actuator"))
    for i, act in enumerate(config.actuators):
        where = f"actuators[{i}]"
        if act.links_per_actuator < 2:
            out.append(Violation(f"{where}.links_per_actuator", "links_per_actuator ≥ 2"))
        if not (_finite(act.length) and act.length > 0):
            out.append(Violation(f"{where}.length", "length > 0"))
        if not (_finite(act.width) and act.width > 0):
            out.append(Violation(f"{where}.width", "width > 0"))
        if not (_finite(act.drive_voltage) and act.drive_voltage >= 0):
            out.append(Violation(f"{where}.drive_voltage", "drive_voltage ≥ 0"))

    mat = config.materials
    if not (_finite(mat.torsional_stiffness) and mat.torsional_stiffness > 0):
        out.append(Violation("materials.torsional_stiffness", "torsional_stiffness > 0"))
    if not (_finite(mat.joint_damping) and mat.joint_damping >= 0):
        out.append(Violation("materials.joint_damping", "joint_damping ≥ 0"))
    if not _finite(mat.voltage_torque_gain):
        out.append(Violation("materials.voltage_torque_gain", "voltage_torque_gain finite"))

    body = config.body_length
    weight = config.weight
    feet = config.feet
    n_cells = len(weight.cell_masses)
    if not (_finite(weight.cell_size) and weight.cell_size > 0):
        out.append(Violation("weight_profile.cell_size", "cell_size > 0"))
    elif abs(n_cells * weight.cell_size - body) > MASS_TOLERANCE:
        out.append(Violation("weight_profile.cell_masses", "cells must cover the body length"))
    if any(not _finite(m) or m < 0 for m in weight.cell_masses):
        out.append(Violation("weight_profile.cell_masses", "all cell masses ≥ 0"))
    if not (_finite(weight.battery_mass) and weight.battery_mass >= 0):
        out.append(Violation("weight_profile.battery_mass", "battery_mass ≥ 0"))
    if weight.total_mass is not None:
        declared = math.fsum([*weight.cell_masses, weight.battery_mass, feet.mass * len(feet.positions_along_body)])
        if abs(declared - weight.total_mass) > MASS_TOLERANCE:
            out.append(
                Violation("weight_profile.total_mass", "sum of cell, battery and feet masses = total robot mass")
            )

    positions = feet.positions_along_body
    if not positions:
        out.append(Violation("feet.positions_along_body", "at least one foot"))
    if any(b <= a for a, b in zip(positions, positions[1:])):
        out.append(Violation("feet.positions_along_body", "foot positions strictly increasing"))
    if any(p > body for p in positions):
        out.append(Violation("feet.positions_along_body", "foot position exceeds body length"))
    if any(p < 0 for p in positions):
        out.append(Violation("feet.positions_along_body", "foot position ≥ 0"))
    if not (_finite(feet.radius) and feet.radius > 0):
        out.append(Violation("feet.radius", "radius > 0"))
    if not (_finite(feet.height) and feet.height >= feet.radius):
        out.append(Violation("feet.height", "height ≥ radius"))
    if not (_finite(feet.mass) and feet.mass >= 0):
        out.append(Violation("feet.mass", "mass ≥ 0"))

    cells = battery_cells(config.battery_position)
    if len(set(cells)) != len(cells):
        out.append(Violation("battery_position", "battery cells must be distinct"))
    if any(c < 0 or c >= n_cells for c in cells):
        out.append(Violation("battery_position", "battery cell index outside the weight profile"))
    if not cells and weight.battery_mass > 0:
        out.append(Violation("battery_position", "battery cells required when battery_mass > 0"))

    return out


def _layout_links(actuators: tuple[ActuatorSpec, ...]) -> tuple[list[float], list[tuple[int, int]]]:
    """Link lengths plus, per actuator, the (first, last) global link indices it spans."""
    lengths: list[float] = []
    spans: list[tuple[int, int]] = []
    for a_idx, act in enumerate(actuators):
        seg = act.length / act.links_per_actuator
        first = len(lengths) - 1 if a_idx > 0 else 0
        for k in range(act.links_per_actuator):
            if a_idx > 0 and k == 0:
                # junction link: merged with the previous actuator's last link
                lengths[-1] += seg
            else:
                lengths.append(seg)
        spans.append((first, len(lengths) - 1))
    return lengths, spans


def _effective_cells(config: RobotConfig) -> list[float]:
    masses = list(config.weight.cell_masses)
    cells = battery_cells(config.battery_position)
    if cells:
        share = config.weight.battery_mass / len(cells)
        for c in cells:
            masses[c] += share
    return masses


def _apportion(cell_masses: list[float], cell_size: float, starts: list[float], ends: list[float]) -> list[float]:
    """Length-weighted apportionment of cell masses onto the links they overlap."""
    link_masses = [0.0] * len(starts)
    for c, mass in enumerate(cell_masses):
        lo, hi = c * cell_size, (c + 1) * cell_size
        pieces = [(i, min(hi, b) - max(lo, a)) for i, (a, b) in enumerate(zip(starts, ends))]
        pieces = [(i, ov) for i, ov in pieces if ov > 0]
        covered = math.fsum(ov for _, ov in pieces)
        if covered <= 0:
            continue
        for i, ov in pieces:
            link_masses[i] += mass * (ov / covered)
    return link_masses


def _host_link(position: float, starts: list[float], ends: list[float]) -> int:
    for i, (a, b) in enumerate(zip(starts, ends)):
        if a <= position < b:
            return i
    return len(starts) - 1


def compile_chain(config: RobotConfig) -> ChainModel:
    """Compile a validated robot description into a ChainModel.

    Raises InvalidConfig when :func:`validate` reports any violation.
    """
    violations = validate(config)
    if violations:
        raise InvalidConfig(
            f"Robot description has {len(violations)} violation(s): {violations[0]}",
            [str(v) for v in violations],
        )

    lengths, spans = _layout_links(config.actuators)
    starts: list[float] = []
    acc = 0.0
    for length in lengths:
        starts.append(acc)
        acc += length
    ends = [*starts[1:], config.body_length]

    masses = _apportion(_effective_cells(config), config.weight.cell_size, starts, ends)
    links = tuple(
        Link(length=length, mass=m, inertia=m * length * length / 12.0, start=s)
        for length, m, s in zip(lengths, masses, starts)
    )

    mat = config.materials
    joints: list[Joint] = []
    for a_idx, ((first, last), side) in enumerate(zip(spans, actuator_channels(config.actuators))):
        for link_idx in range(first + 1, last + 1):
            joints.append(
                Joint(
                    stiffness=mat.torsional_stiffness,
                    damping=mat.joint_damping,
                    voltage_gain=mat.voltage_torque_gain,
                    actuator=a_idx,
                    channel=side,
                    link=link_idx,
                    max_voltage=config.actuators[a_idx].drive_voltage,
                )
            )

    fs = config.feet
    feet = []
    for pos in fs.positions_along_body:
        host = _host_link(pos, starts, ends)
        feet.append(
            Foot(link=host, offset=pos - starts[host], position=pos, radius=fs.radius, height=fs.height, mass=fs.mass)
        )

    total = math.fsum(link.mass for link in links) + math.fsum(f.mass for f in feet)
    logger.debug("compiled %d links, %d joints, %d feet, %.6g kg", len(links), len(joints), len(feet), total)
    return ChainModel(
        links=links,
        joints=tuple(joints),
        feet=tuple(feet),
        total_mass=total,
        body_length=config.body_length,
    )


def uniform_robot_config(
    n_actuators: int = 2,
    total_mass: float | None = None,
    links_per_actuator: int = 6,
) -> RobotConfig:
    """Battery-free robot with uniformly spread mass and feet placed symmetrically.

    ``total_mass`` defaults to the two-actuator robot's 44.5 g scaled by actuator count.
    """
    actuators = tuple(ActuatorSpec(links_per_actuator=links_per_actuator) for _ in range(n_actuators))
    body = sum(a.length for a in actuators)
    n_cells = round(body / DEFAULT_CELL_SIZE)
    feet = FootSpec(positions_along_body=(0.025, body - 0.025))
    total = total_mass if total_mass is not None else 0.0445 * n_actuators / 2
    cell = (total - 2 * feet.mass) / n_cells
    weight = WeightProfile(cell_masses=(cell,) * n_cells, battery_mass=0.0, total_mass=total)
    return RobotConfig(actuators=actuators, weight=weight, feet=feet, battery_position=CustomBattery(custom=()))


def default_robot_config(n_actuators: int = 2) -> RobotConfig:
    """The studied two-actuator robot (batteries at P1); other sizes get the same per-cell base mass."""
    if n_actuators == 2:
        return RobotConfig()
    actuators = tuple(ActuatorSpec() for _ in range(n_actuators))
    body = sum(a.length for a in actuators)
    n_cells = round(body / DEFAULT_CELL_SIZE)
    feet = FootSpec(positions_along_body=(0.025, body - 0.025))
    cells = (DEFAULT_BASE_CELL_MASS,) * n_cells
    total = math.fsum([*cells, 2 * DEFAULT_FOOT_MASS])
    weight = WeightProfile(cell_masses=cells, battery_mass=0.0, total_mass=total)
    return RobotConfig(actuators=actuators, weight=weight, feet=feet, battery_position=CustomBattery(custom=()))


def with_battery(config: RobotConfig, position: BatteryPlacement) -> RobotConfig:
    """Copy of ``config`` with the batteries moved."""
    return config.model_copy(update={"battery_position": position})


def mirror_config(config: RobotConfig) -> RobotConfig:
    """Reflect the robot about its midpoint: actuators, cells, feet and batteries.

    Explicit actuator channels are swapped so the physically-left actuator keeps
    following the left drive channel.
    """
    flip: dict[str | None, Literal["left", "right"] | None] = {"left": "right", "right": "left", None: None}
    actuators = tuple(a.model_copy(update={"channel": flip[a.channel]}) for a in reversed(config.actuators))
    body = config.body_length
    n_cells = len(config.weight.cell_masses)
    weight = config.weight.model_copy(update={"cell_masses": tuple(reversed(config.weight.cell_masses))})
    feet = config.feet.model_copy(
        update={"positions_along_body": tuple(body - p for p in reversed(config.feet.positions_along_body))}
    )
    cells = tuple(sorted(n_cells - 1 - c for c in battery_cells(config.battery_position)))
    return config.model_copy(
        update={"actuators": actuators, "weight": weight, "feet": feet, "battery_position": CustomBattery(custom=cells)}
    )
