"""Planar articulated-chain dynamics with penalty ground contact and stick-slip friction.

Reduced coordinates: ``y = [x0, z0, φ_0 … φ_{n-1}]`` where ``(x0, z0)`` is the robot's
left end and ``φ_k`` the absolute angle of link k. Joint angles are the differences
``q_j = φ_j − φ_{j-1}``, so chain connectivity holds exactly. World x points towards
the robot's left end (leftward motion is positive velocity), z points up, and a
positive joint angle bends the sheet concave-down.

Integration is semi-implicit Euler. Joint springs and dampers, the normal contact
penalty and both friction modes enter the velocity solve implicitly; gravity, drive
torques and velocity-product terms are explicit. Positions are then advanced with the
new velocities, so an undriven run loses energy with or without the ground.

Two kinds of point touch the ground: the cylindrical feet, and the sheet's link
junctions including both ends, so a body that tips over lands on its sheet instead
of passing through the floor. Only the feet appear in the force channels.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from vibrosheet.actuation import voltage_at
from vibrosheet.errors import InvalidRange, NumericalBlowup, WindowTooShort
from vibrosheet.models import ContactParams, IntegratorParams, MaterialParams
from vibrosheet.output import write_csv_atomic

if TYPE_CHECKING:
    from pathlib import Path

    from vibrosheet.models import ActuationPattern
    from vibrosheet.robot import ChainModel

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

COORDINATE_LIMIT = 1.0e3
MIN_MEASURED_PERIODS = 10
# Largest step that still resolves a contact oscillation at the default 5000 N/m.
CONTACT_DT_AT_DEFAULT_STIFFNESS = 2.0e-4
_DEFAULT_NORMAL_STIFFNESS = 5000.0


@dataclass(frozen=True, eq=False)
class BodyState:
    """Generalised coordinates and velocities at one instant."""

    coords: FloatArray
    velocities: FloatArray
    time: float = 0.0
    step: int = 0

    def poses(self, chain: ChainModel) -> FloatArray:
        """Per-link ``(x, z, θ)`` of the link centres, shape (n_links, 3)."""
        solver = chain_solver(chain)
        kin = solver.kinematics(self.coords, self.velocities)
        n = chain.n_links
        return np.column_stack([kin.px[:n], kin.pz[:n], self.coords[2:]])

    def pose_velocities(self, chain: ChainModel) -> FloatArray:
        """Per-link ``(ẋ, ż, θ̇)`` of the link centres, shape (n_links, 3)."""
        solver = chain_solver(chain)
        kin = solver.kinematics(self.coords, self.velocities)
        n = chain.n_links
        return np.column_stack([(kin.jx @ self.velocities)[:n], (kin.jz @ self.velocities)[:n], self.velocities[2:]])


@dataclass(frozen=True)
class Kinematics:
    """Point positions, Jacobians and velocity-product accelerations for one state.

    Arrays are stacked: the first ``n_points`` rows are x components, the rest z.
    """

    pos: FloatArray
    jac: FloatArray
    bias: FloatArray
    n_points: int

    @property
    def px(self) -> FloatArray:
        return self.pos[: self.n_points]

    @property
    def pz(self) -> FloatArray:
        return self.pos[self.n_points :]

    @property
    def jx(self) -> FloatArray:
        return self.jac[: self.n_points]

    @property
    def jz(self) -> FloatArray:
        return self.jac[self.n_points :]


@dataclass(frozen=True)
class FootForces:
    """Per-foot contact forces (N) over one step."""

    normal: FloatArray
    tangential: FloatArray


@dataclass
class Trajectory:
    """Sampled run: states, centre of mass and per-foot contact channels."""

    time: FloatArray
    coords: FloatArray
    velocities: FloatArray
    joint_angles: FloatArray
    x_com: FloatArray
    z_com: FloatArray
    foot_x: FloatArray
    foot_normal: FloatArray
    foot_tangential: FloatArray
    transient: float = 0.0
    dt: float = 1.0e-4
    stride: int = 1
    meta: dict[str, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.time)

    def state(self, index: int) -> BodyState:
        return BodyState(
            coords=self.coords[index].copy(),
            velocities=self.velocities[index].copy(),
            time=float(self.time[index]),
            step=int(round(self.time[index] / self.dt)),
        )

    def feet_spacing(self) -> FloatArray:
        """Distance between the first and last foot contact points per sample."""
        if self.foot_x.shape[1] < 2:
            return np.zeros(len(self.time))
        result: FloatArray = np.abs(self.foot_x[:, 0] - self.foot_x[:, -1])
        return result

    def header(self) -> list[str]:
        cols = ["t", "x_com", "z_com"]
        cols += [f"theta_{j + 1}" for j in range(self.joint_angles.shape[1])]
        for i in range(self.foot_x.shape[1]):
            cols += [f"foot{i + 1}_x", f"foot{i + 1}_N", f"foot{i + 1}_Ft"]
        return cols

    def rows(self) -> list[list[float]]:
        out = []
        for k in range(len(self.time)):
            row = [float(self.time[k]), float(self.x_com[k]), float(self.z_com[k])]
            row += [float(a) for a in self.joint_angles[k]]
            for i in range(self.foot_x.shape[1]):
                row += [float(self.foot_x[k, i]), float(self.foot_normal[k, i]), float(self.foot_tangential[k, i])]
            out.append(row)
        return out

    def write_csv(self, path: Path) -> None:
        write_csv_atomic(path, self.header(), self.rows())


def joint_torque(theta: float, omega: float, voltage: float, materials: MaterialParams) -> float:
    """Spring-motor torque τ = −k·θ − b·ω + g_v·V."""
    return (
        -materials.torsional_stiffness * theta
        - materials.joint_damping * omega
        + materials.voltage_torque_gain * voltage
    )


def foot_contact_force(
    penetration: float,
    penetration_rate: float,
    tangential_velocity: float,
    params: ContactParams,
) -> tuple[float, float]:
    """Penalty normal force and regularised Coulomb friction for one foot.

    Friction is ``−μ·N·sat(v_t / v_stic)``, linear below the stiction velocity.
    """
    if penetration <= 0:
        return 0.0, 0.0
    normal = max(0.0, params.normal_stiffness * penetration + params.normal_damping * penetration_rate)
    if params.stiction_velocity > 0:
        ratio = max(-1.0, min(1.0, tangential_velocity / params.stiction_velocity))
    else:
        ratio = float(np.sign(tangential_velocity))
    return normal, -params.friction_coefficient * normal * ratio


class ChainSolver:
    """Precomputed kinematic structure of a ChainModel.

    Points are ordered link centres, foot centres, then the n_links + 1 sheet nodes.
    Nodes carry no mass and only take part in ground contact.
    """

    def __init__(self, chain: ChainModel) -> None:
        self.chain = chain
        n = chain.n_links
        self.n_links = n
        self.n_coords = n + 2
        lengths = np.array([link.length for link in chain.links])
        self.lengths = lengths
        n_feet = len(chain.feet)
        self.n_feet = n_feet

        hosts = list(range(n)) + [f.link for f in chain.feet] + [0] + list(range(n))
        along = (
            [link.length / 2 for link in chain.links]
            + [f.offset for f in chain.feet]
            + [0.0]
            + [link.length for link in chain.links]
        )
        offset = [0.0] * n + [f.height - f.radius for f in chain.feet] + [0.0] * (n + 1)
        self.masses = np.array([link.mass for link in chain.links] + [f.mass for f in chain.feet] + [0.0] * (n + 1))
        self.total_mass = float(self.masses.sum())
        n_points = len(hosts)
        self.n_points = n_points
        s_mat = np.zeros((n_points, n))
        e_mat = np.zeros((n_points, n))
        for p, host in enumerate(hosts):
            s_mat[p, :host] = lengths[:host]
            s_mat[p, host] = along[p]
            e_mat[p, host] = offset[p]
        self.s_mat, self.e_mat = s_mat, e_mat
        # stacked x/z rows: position = V·sin − U·cos, angle Jacobian = U·sin + V·cos
        self._u = np.vstack([s_mat, e_mat])
        self._v = np.vstack([e_mat, -s_mat])
        self._jac_base = np.zeros((2 * n_points, self.n_coords))
        self._jac_base[:n_points, 0] = 1.0
        self._jac_base[n_points:, 1] = 1.0
        self._weights = np.concatenate([self.masses, self.masses])
        self._weight_col = self._weights[:, None]
        self._lift = np.concatenate([np.zeros(n_points), self.masses])
        self.inertia = np.zeros(self.n_coords)
        self.inertia[2:] = [link.inertia for link in chain.links]

        self.foot_points = np.arange(n, n + n_feet)
        self.foot_hosts = np.array([f.link for f in chain.feet], dtype=int)
        self.foot_radius = np.array([f.radius for f in chain.feet])
        self.node_points = np.arange(n + n_feet, n_points)
        self.contact_points = np.concatenate([self.foot_points, self.node_points])
        self.contact_radius = np.concatenate([self.foot_radius, np.zeros(n + 1)])
        # the foot's contact material point sits r below the centre of a rolling cylinder
        self._roll = np.zeros((len(self.contact_points), self.n_coords))
        self._roll[np.arange(n_feet), 2 + self.foot_hosts] = self.foot_radius

        # q = A y
        n_joints = chain.n_joints
        self.joint_map = np.zeros((n_joints, self.n_coords))
        for j, joint in enumerate(chain.joints):
            self.joint_map[j, 2 + joint.link] = 1.0
            self.joint_map[j, 2 + joint.link - 1] = -1.0
        self.stiffness = np.array([j.stiffness for j in chain.joints])
        self.damping = np.array([j.damping for j in chain.joints])
        self.gain = np.array([j.voltage_gain for j in chain.joints])
        self.max_voltage = np.array([j.max_voltage for j in chain.joints])
        self.is_left = np.array([j.channel == "left" for j in chain.joints], dtype=bool)
        self._joint_operators: dict[float, FloatArray] = {}

    def kinematics(self, coords: FloatArray, velocities: FloatArray) -> Kinematics:
        phi = coords[2:]
        omega2 = velocities[2:] ** 2
        cos, sin = np.cos(phi), np.sin(phi)
        n_points = self.n_points

        pos = self._v @ sin - self._u @ cos
        pos[:n_points] += coords[0]
        pos[n_points:] += coords[1]
        jac = self._jac_base.copy()
        jac[:, 2:] = self._u * sin + self._v * cos
        bias = self._u @ (omega2 * cos) - self._v @ (omega2 * sin)
        return Kinematics(pos=pos, jac=jac, bias=bias, n_points=n_points)

    def mass_matrix(self, kin: Kinematics) -> FloatArray:
        mass: FloatArray = kin.jac.T @ (self._weight_col * kin.jac)
        mass[np.diag_indices(self.n_coords)] += self.inertia
        return mass

    def joint_operator(self, dt: float) -> FloatArray:
        """``dt·Aᵀ(B + dt·K)A``: the implicit joint spring-damper block of the step matrix."""
        operator = self._joint_operators.get(dt)
        if operator is None:
            operator = dt * (self.joint_map.T * (self.damping + dt * self.stiffness)) @ self.joint_map
            self._joint_operators[dt] = operator
        return operator

    def joint_voltages(self, pattern: ActuationPattern | None, t: float) -> FloatArray:
        if pattern is None:
            return np.zeros(len(self.gain))
        v_left = voltage_at(pattern, "left", t)
        v_right = voltage_at(pattern, "right", t)
        volts = np.where(self.is_left, v_left, v_right)
        clipped: FloatArray = np.minimum(volts, self.max_voltage)
        return clipped

    def com(self, kin: Kinematics) -> tuple[float, float]:
        return (
            float(self.masses @ kin.px) / self.total_mass,
            float(self.masses @ kin.pz) / self.total_mass,
        )

    def contact_geometry(self, kin: Kinematics) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
        """Penetration, contact-point x, normal and tangential Jacobian rows.

        Rows are the feet first, then the sheet nodes.
        """
        cp = self.contact_points
        penetration = self.contact_radius - kin.pos[self.n_points + cp]
        jn = kin.jac[self.n_points + cp]
        jt = kin.jac[cp] + self._roll
        return penetration, kin.pos[cp], jn, jt

    def advance(
        self,
        state: BodyState,
        pattern: ActuationPattern | None,
        contacts: ContactParams | None,
        integ: IntegratorParams,
    ) -> tuple[BodyState, FootForces]:
        dt = integ.dt
        y, v = state.coords, state.velocities
        kin = self.kinematics(y, v)
        mass = self.mass_matrix(kin)

        q = self.joint_map @ y
        drive = self.gain * self.joint_voltages(pattern, state.time)
        generalized = -integ.gravity * (self._lift @ kin.jac)
        generalized -= kin.jac.T @ (self._weights * kin.bias)
        generalized += self.joint_map.T @ (-self.stiffness * q + drive)

        lhs = mass + self.joint_operator(dt)
        rhs = mass @ v + dt * generalized

        n_feet = self.n_feet
        if contacts is None:
            v_new = np.linalg.solve(lhs, rhs)
            forces = FootForces(np.zeros(n_feet), np.zeros(n_feet))
        else:
            penetration, _, jn, jt = self.contact_geometry(kin)
            v_new, normal, tangential = _solve_contacts(lhs, rhs, v, penetration, jn, jt, contacts, dt)
            forces = FootForces(normal[:n_feet], tangential[:n_feet])

        y_new = y + dt * v_new
        step_index = state.step + 1
        t_new = step_index * dt
        extent = np.max(np.abs(y_new))
        if not extent <= COORDINATE_LIMIT or not np.isfinite(v_new).all():
            raise NumericalBlowup(f"Simulation diverged at t = {t_new:.6g} s (dt = {dt:g} s)", time=t_new)
        return BodyState(coords=y_new, velocities=v_new, time=t_new, step=step_index), forces


def _solve_contacts(
    lhs: FloatArray,
    rhs: FloatArray,
    v: FloatArray,
    penetration: FloatArray,
    jn: FloatArray,
    jt: FloatArray,
    contacts: ContactParams,
    dt: float,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Implicit penalty contact with an active set over engagement and stick/slide.

    An engaged contact pushes with ``N = k·p' + c·ṗ'`` at the end of the step, where
    ``p' = p + dt·ṗ'``, so stiffness and damping sit in the velocity solve next to the
    joint springs. Sticking contacts get ``F = −(μ·N₀/v_stic)·v_t'`` with ``N₀`` the
    predicted load; sliding contacts get ``F = −μ·N·sign(v_t)``, linear in the implicit N.
    A contact that would pull is released, one that ends the step penetrating is
    engaged, and each contact changes each mode at most once, so the loop ends after
    at most 4·n_contacts + 1 solves.
    """
    k, c = contacts.normal_stiffness, contacts.normal_damping
    mu, v_stic = contacts.friction_coefficient, contacts.stiction_velocity
    gain = c + dt * k
    rate = -(jn @ v)
    vt = jt @ v
    predicted = penetration + dt * rate
    engaged = predicted > 0
    released = np.zeros_like(engaged)
    if v_stic > 0:
        viscous = mu * np.maximum(0.0, k * predicted + c * rate) / v_stic
        stick = engaged & (np.abs(vt) < v_stic)
    else:
        viscous = np.zeros_like(predicted)
        stick = np.zeros_like(engaged)
    tried_stick = stick.copy()
    sign = np.where(vt >= 0, 1.0, -1.0)

    for _ in range(4 * len(penetration) + 1):
        w_normal = np.where(engaged, gain, 0.0)
        w_stick = np.where(engaged & stick, viscous, 0.0)
        w_slide = np.where(engaged & ~stick, mu * sign, 0.0)
        a = lhs + dt * ((jn.T * w_normal) @ jn + (jt.T * w_stick) @ jt - (jt.T * (gain * w_slide)) @ jn)
        b = rhs + (dt * k) * (jn.T @ np.where(engaged, penetration, 0.0) - jt.T @ (w_slide * penetration))
        v_new = np.linalg.solve(a, b)
        sink = jn @ v_new
        normal = k * penetration - gain * sink
        vt_new = jt @ v_new

        changed = False
        for i in np.flatnonzero(engaged | (penetration - dt * sink > 0)):
            if engaged[i]:
                if normal[i] < 0:
                    engaged[i] = False
                    released[i] = True
                    changed = True
                elif stick[i] and viscous[i] * abs(vt_new[i]) > mu * normal[i]:
                    stick[i] = False
                    sign[i] = 1.0 if vt_new[i] > 0 else -1.0
                    changed = True
                elif not stick[i] and vt_new[i] * sign[i] < 0 and not tried_stick[i]:
                    stick[i] = True
                    tried_stick[i] = True
                    changed = True
            elif not released[i]:
                engaged[i] = True
                sign[i] = 1.0 if vt_new[i] >= 0 else -1.0
                changed = True
        if not changed:
            break

    tangential = np.where(
        engaged & stick,
        -viscous * vt_new,
        np.where(engaged, -mu * sign * normal, 0.0),
    )
    return v_new, np.where(engaged, np.maximum(normal, 0.0), 0.0), tangential


@functools.lru_cache(maxsize=32)
def chain_solver(chain: ChainModel) -> ChainSolver:
    """Shared solver for a compiled chain (ChainModel is immutable and hashable)."""
    return ChainSolver(chain)


def contact_forces(
    state: BodyState, chain: ChainModel, params: ContactParams
) -> list[tuple[float, float]]:
    """Per-foot ``(normal, tangential)`` forces from the regularised contact law."""
    solver = chain_solver(chain)
    kin = solver.kinematics(state.coords, state.velocities)
    penetration, _, jn, jt = solver.contact_geometry(kin)
    feet = slice(0, solver.n_feet)
    rates = -(jn[feet] @ state.velocities)
    slips = jt[feet] @ state.velocities
    return [
        foot_contact_force(float(p), float(r), float(s), params)
        for p, r, s in zip(penetration[feet], rates, slips)
    ]


def initial_state(chain: ChainModel, height: float | None = None) -> BodyState:
    """Flat resting pose, zero velocity. The sheet sits at the feet height unless ``height`` is given."""
    if height is None:
        height = max((f.height for f in chain.feet), default=0.0)
    coords = np.zeros(chain.n_links + 2)
    coords[0] = chain.body_length
    coords[1] = height
    return BodyState(coords=coords, velocities=np.zeros_like(coords))


def resting_state(
    chain: ChainModel,
    contacts: ContactParams | None = ContactParams(),
    integ: IntegratorParams | None = None,
    settle: float = 1.0,
) -> BodyState:
    """State after ``settle`` seconds of zero drive from the flat pose.

    The flat pose is not an equilibrium: the sheet sags between and beyond the feet
    and the feet sink to their penalty depth. Drift measured from here is the
    integrator's, not the settling's.
    """
    integ = integ or IntegratorParams()
    solver = chain_solver(chain)
    state = initial_state(chain)
    for _ in range(int(round(settle / integ.dt))):
        state, _ = solver.advance(state, None, contacts, integ)
    return state


def check_timestep(integ: IntegratorParams, contacts: ContactParams | None) -> None:
    """Warn when dt is too coarse to resolve the contact oscillation."""
    if integ.dt <= 0:
        raise InvalidRange(f"dt must be > 0, got {integ.dt!r}")
    if contacts is None or contacts.normal_stiffness <= 0:
        return
    bound = CONTACT_DT_AT_DEFAULT_STIFFNESS * math.sqrt(_DEFAULT_NORMAL_STIFFNESS / contacts.normal_stiffness)
    if integ.dt > bound:
        logger.warning(
            "dt = %g s exceeds the contact resolution bound %.3g s for normal_stiffness = %g N/m; "
            "results will be unreliable",
            integ.dt,
            bound,
            contacts.normal_stiffness,
        )


def step(
    state: BodyState,
    chain: ChainModel,
    pattern: ActuationPattern | None,
    contacts: ContactParams | None,
    integ: IntegratorParams,
) -> BodyState:
    """Advance one fixed step. Raises NumericalBlowup on divergence."""
    new_state, _ = chain_solver(chain).advance(state, pattern, contacts, integ)
    return new_state


def simulate(
    chain: ChainModel,
    pattern: ActuationPattern | None,
    duration: float,
    integ: IntegratorParams | None = None,
    contacts: ContactParams | None = ContactParams(),
    *,
    transient: float = 0.0,
    initial: BodyState | None = None,
) -> Trajectory:
    """Integrate from the flat resting pose (or ``initial``) for ``duration`` seconds.

    ``contacts=None`` removes the ground. Samples are taken every ``integ.sample_stride``
    steps plus the final step. NumericalBlowup propagates with the failing time stamp.
    """
    integ = integ or IntegratorParams()
    check_timestep(integ, contacts)
    if integ.sample_stride < 1:
        raise InvalidRange(f"sample_stride must be >= 1, got {integ.sample_stride}")

    solver = chain_solver(chain)
    state = initial or initial_state(chain)
    n_steps = int(round(duration / integ.dt))
    stride = integ.sample_stride
    sample_steps = list(range(0, n_steps + 1, stride))
    if sample_steps[-1] != n_steps:
        sample_steps.append(n_steps)
    n_samples = len(sample_steps)
    n_feet = len(chain.feet)

    time = np.empty(n_samples)
    coords = np.empty((n_samples, solver.n_coords))
    velocities = np.empty((n_samples, solver.n_coords))
    x_com = np.empty(n_samples)
    z_com = np.empty(n_samples)
    foot_x = np.empty((n_samples, n_feet))
    foot_normal = np.zeros((n_samples, n_feet))
    foot_tangential = np.zeros((n_samples, n_feet))

    def record(k: int, st: BodyState, forces: FootForces | None) -> None:
        kin = solver.kinematics(st.coords, st.velocities)
        time[k] = st.time
        coords[k] = st.coords
        velocities[k] = st.velocities
        x_com[k], z_com[k] = solver.com(kin)
        foot_x[k] = kin.px[solver.foot_points]
        if forces is not None:
            foot_normal[k] = forces.normal
            foot_tangential[k] = forces.tangential

    initial_forces = None
    if contacts is not None and n_feet:
        pairs = contact_forces(state, chain, contacts)
        initial_forces = FootForces(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))
    record(0, state, initial_forces)

    logger.debug("simulating %d steps of %g s (%d samples)", n_steps, integ.dt, n_samples)
    base_step = state.step
    next_sample = 1
    for _ in range(n_steps):
        state, forces = solver.advance(state, pattern, contacts, integ)
        if next_sample < n_samples and state.step - base_step == sample_steps[next_sample]:
            record(next_sample, state, forces)
            next_sample += 1

    return Trajectory(
        time=time,
        coords=coords,
        velocities=velocities,
        joint_angles=coords @ solver.joint_map.T,
        x_com=x_com,
        z_com=z_com,
        foot_x=foot_x,
        foot_normal=foot_normal,
        foot_tangential=foot_tangential,
        transient=transient,
        dt=integ.dt,
        stride=stride,
    )


def steady_state_velocity(traj: Trajectory, pattern: ActuationPattern) -> float:
    """Mean centre-of-mass velocity (m/s, leftward positive) over whole drive periods.

    The window ends at the last sample and spans the largest integer number of periods
    that fits after the transient. Raises WindowTooShort below ten periods.
    """
    t_end = float(traj.time[-1])
    available = t_end - traj.transient
    periods = math.floor(available * pattern.frequency + 1e-9)
    if periods < MIN_MEASURED_PERIODS:
        raise WindowTooShort(
            f"Measurement window {available:.6g} s holds {periods} period(s) at "
            f"{pattern.frequency:g} Hz; need at least {MIN_MEASURED_PERIODS}"
        )
    span = periods / pattern.frequency
    t_start = t_end - span
    x_start = float(np.interp(t_start, traj.time, traj.x_com))
    x_end = float(traj.x_com[-1])
    return (x_end - x_start) / span


def static_equilibrium(chain: ChainModel, v_left: float, v_right: float) -> FloatArray:
    """Joint angles θ_i = g_v·V/k for the channel driving each joint (no gravity, no contact)."""
    volts = np.array(
        [min(v_left if j.channel == "left" else v_right, j.max_voltage) for j in chain.joints], dtype=float
    )
    gain = np.array([j.voltage_gain for j in chain.joints])
    stiffness = np.array([j.stiffness for j in chain.joints])
    result: FloatArray = gain * volts / stiffness
    return result


def mechanical_energy(
    state: BodyState,
    chain: ChainModel,
    contacts: ContactParams | None,
    integ: IntegratorParams,
) -> float:
    """Kinetic + gravitational + joint-elastic + contact-penalty energy (J).

    The penalty term covers every ground contact, feet and sheet nodes alike.
    """
    solver = chain_solver(chain)
    kin = solver.kinematics(state.coords, state.velocities)
    v = state.velocities
    kinetic = 0.5 * float(v @ solver.mass_matrix(kin) @ v)
    gravitational = integ.gravity * float(solver.masses @ kin.pz)
    q = solver.joint_map @ state.coords
    elastic = 0.5 * float(solver.stiffness @ (q * q))
    penalty = 0.0
    if contacts is not None:
        penetration, _, _, _ = solver.contact_geometry(kin)
        p = np.maximum(penetration, 0.0)
        penalty = 0.5 * contacts.normal_stiffness * float(p @ p)
    return kinetic + gravitational + elastic + penalty
