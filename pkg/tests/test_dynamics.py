"""Tests for the chain dynamics: contact law, integrator and trajectory bookkeeping."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pytest

from tests.conftest import make_trajectory
from vibrosheet.dynamics import (
    BodyState,
    chain_solver,
    check_timestep,
    contact_forces,
    foot_contact_force,
    initial_state,
    joint_torque,
    mechanical_energy,
    resting_state,
    simulate,
    static_equilibrium,
    steady_state_velocity,
    step,
)
from vibrosheet.actuation import voltage_at
from vibrosheet.errors import InvalidRange, NumericalBlowup, WindowTooShort
from vibrosheet.models import ActuationPattern, ContactParams, IntegratorParams, MaterialParams, RobotConfig
from vibrosheet.robot import ChainModel, compile_chain

VACUUM = IntegratorParams(gravity=0.0)


class TestJointTorque:
    def test_rest(self) -> None:
        assert joint_torque(0.0, 0.0, 0.0, MaterialParams()) == 0.0

    def test_voltage_balances_deflection(self) -> None:
        assert joint_torque(0.1, 0.0, 300.0, MaterialParams()) == pytest.approx(0.0, abs=1e-15)

    def test_pure_spring(self) -> None:
        assert joint_torque(0.2, 0.0, 0.0, MaterialParams()) == pytest.approx(-0.064)

    def test_damping_opposes_rate(self) -> None:
        assert joint_torque(0.0, 2.0, 0.0, MaterialParams(joint_damping=0.01)) == pytest.approx(-0.02)


class TestFootContactForce:
    def test_no_contact_above_ground(self) -> None:
        assert foot_contact_force(-0.001, 0.0, 0.5, ContactParams()) == (0.0, 0.0)

    def test_static_penetration(self) -> None:
        normal, tangential = foot_contact_force(1e-4, 0.0, 0.0, ContactParams())
        assert normal == pytest.approx(0.5)
        assert tangential == 0.0

    def test_sliding_opposes_motion(self) -> None:
        _, tangential = foot_contact_force(1e-4, 0.0, 1.0, ContactParams())
        assert tangential == pytest.approx(-0.18)

    def test_regularised_below_stiction(self) -> None:
        _, tangential = foot_contact_force(1e-4, 0.0, -0.5e-3, ContactParams())
        assert tangential == pytest.approx(0.09)

    def test_separating_contact_never_pulls(self) -> None:
        normal, _ = foot_contact_force(1e-5, -1.0, 0.0, ContactParams())
        assert normal == 0.0


class TestContactForces:
    def test_flat_pose_just_touches(self, default_chain: ChainModel) -> None:
        forces = contact_forces(initial_state(default_chain), default_chain, ContactParams())
        assert forces == [(0.0, 0.0), (0.0, 0.0)]

    def test_lowered_pose_presses_both_feet(self, default_chain: ChainModel) -> None:
        state = initial_state(default_chain, height=0.01 - 1e-4)
        forces = contact_forces(state, default_chain, ContactParams())
        for normal, tangential in forces:
            assert normal == pytest.approx(0.5, rel=1e-9)
            assert tangential == 0.0


class TestKinematics:
    def test_initial_pose(self, default_chain: ChainModel) -> None:
        state = initial_state(default_chain)
        assert state.coords[0] == pytest.approx(0.2)
        assert state.coords[1] == 0.01
        assert not state.velocities.any()

    def test_link_endpoints_coincide(self, default_chain: ChainModel) -> None:
        rng = np.random.default_rng(7)
        coords = initial_state(default_chain).coords.copy()
        coords[2:] = rng.uniform(-0.5, 0.5, default_chain.n_links)
        poses = BodyState(coords=coords, velocities=np.zeros_like(coords)).poses(default_chain)
        half = np.array([link.length / 2 for link in default_chain.links])
        d = np.column_stack([-np.cos(poses[:, 2]), -np.sin(poses[:, 2])])
        ends = poses[:-1, :2] + half[:-1, None] * d[:-1]
        starts = poses[1:, :2] - half[1:, None] * d[1:]
        assert np.max(np.abs(ends - starts)) < 1e-12

    def test_flat_link_centres(self, default_chain: ChainModel) -> None:
        poses = initial_state(default_chain).poses(default_chain)
        assert poses.shape == (11, 3)
        assert poses[0, 0] == pytest.approx(0.2 - 0.1 / 12)
        assert np.allclose(poses[:, 1], 0.01)

    def test_pose_velocities_of_translation(self, default_chain: ChainModel) -> None:
        state = initial_state(default_chain)
        velocities = np.zeros_like(state.coords)
        velocities[0] = 0.3
        moving = BodyState(coords=state.coords, velocities=velocities)
        rates = moving.pose_velocities(default_chain)
        assert np.allclose(rates[:, 0], 0.3)
        assert np.allclose(rates[:, 1:], 0.0)

    def test_mass_matrix_symmetric_positive(self, default_chain: ChainModel) -> None:
        solver = chain_solver(default_chain)
        state = initial_state(default_chain)
        mass = solver.mass_matrix(solver.kinematics(state.coords, state.velocities))
        assert np.allclose(mass, mass.T)
        assert np.all(np.linalg.eigvalsh(mass) > 0)
        assert mass[0, 0] == pytest.approx(default_chain.total_mass)


class TestStep:
    def test_vacuum_equilibrium_is_fixed_point(self, default_chain: ChainModel) -> None:
        state = initial_state(default_chain)
        after = step(state, default_chain, None, None, VACUUM)
        assert np.array_equal(after.coords, state.coords)
        assert not after.velocities.any()

    def test_advances_time(self, default_chain: ChainModel) -> None:
        after = step(initial_state(default_chain), default_chain, None, ContactParams(), IntegratorParams())
        assert after.step == 1
        assert after.time == pytest.approx(1e-4)

    @pytest.mark.parametrize("gravity", [0.0, 9.8])
    def test_zero_drive_is_passive(self, default_chain: ChainModel, gravity: float) -> None:
        integ = IntegratorParams(gravity=gravity)
        coords = initial_state(default_chain, height=0.05).coords.copy()
        coords[2:] = 1e-4 * np.sin(np.arange(default_chain.n_links))
        state = BodyState(coords=coords, velocities=np.zeros_like(coords))
        energy = mechanical_energy(state, default_chain, None, integ)
        for _ in range(500):
            state = step(state, default_chain, None, None, integ)
            current = mechanical_energy(state, default_chain, None, integ)
            assert current <= energy + 1e-9
            energy = current

    def test_blowup_raises_with_time(self) -> None:
        # 1e3 N·m/V drives the link angles past the coordinate limit within a few steps
        runaway = compile_chain(RobotConfig(materials=MaterialParams(voltage_torque_gain=1.0e3)))
        pattern = ActuationPattern(frequency=16, duty_left=0.6)
        with pytest.raises(NumericalBlowup) as exc_info:
            simulate(runaway, pattern, 2.0)
        assert 0 < exc_info.value.time <= 2.0
        assert exc_info.value.exit_code == 2

    def test_coarse_step_stays_bounded(self, default_chain: ChainModel) -> None:
        pattern = ActuationPattern(frequency=16, duty_left=0.6)
        traj = simulate(default_chain, pattern, 1.0, IntegratorParams(dt=2e-3, sample_stride=1))
        assert np.all(np.isfinite(traj.coords))
        assert traj.z_com.min() > -0.01


class TestGroundContact:
    def test_geometry_lists_feet_then_nodes(self, default_chain: ChainModel) -> None:
        solver = chain_solver(default_chain)
        state = initial_state(default_chain)
        penetration, x, jn, jt = solver.contact_geometry(solver.kinematics(state.coords, state.velocities))
        assert len(penetration) == 2 + default_chain.n_links + 1
        assert penetration[:2] == pytest.approx([0.0, 0.0], abs=1e-15)
        assert penetration[2:] == pytest.approx(np.full(12, -0.01))
        assert x[2] == pytest.approx(0.2)
        assert x[-1] == pytest.approx(0.0, abs=1e-15)
        assert jn.shape == jt.shape == (14, default_chain.n_links + 2)

    def test_drop_onto_ground_is_passive(self, default_chain: ChainModel) -> None:
        integ = IntegratorParams()
        contacts = ContactParams()
        state = initial_state(default_chain, height=0.01 + 2e-4)
        energy = mechanical_energy(state, default_chain, contacts, integ)
        touched = False
        for _ in range(3000):
            state = step(state, default_chain, None, contacts, integ)
            current = mechanical_energy(state, default_chain, contacts, integ)
            assert current <= energy + 1e-9
            energy = current
            touched = touched or any(n > 0 for n, _ in contact_forces(state, default_chain, contacts))
        assert touched

    def test_upside_down_sheet_rests_on_its_nodes(self, default_chain: ChainModel) -> None:
        # feet pointing up: only the sheet itself can stop the fall
        coords = np.zeros(default_chain.n_links + 2)
        coords[1] = 0.02
        coords[2:] = np.pi
        flipped = BodyState(coords=coords, velocities=np.zeros_like(coords))
        traj = simulate(default_chain, None, 0.4, IntegratorParams(sample_stride=10), initial=flipped)
        solver = chain_solver(default_chain)
        lowest = min(
            float(solver.kinematics(c, v).pz[solver.node_points].min())
            for c, v in zip(traj.coords, traj.velocities)
        )
        assert lowest > -2e-3
        assert traj.z_com[-1] == pytest.approx(0.0, abs=1e-3)

    def test_resting_state_is_still(self, default_chain: ChainModel) -> None:
        rest = resting_state(default_chain, settle=0.5)
        assert rest.time == pytest.approx(0.5)
        assert np.max(np.abs(rest.velocities[:2])) < 1e-4
        forces = contact_forces(rest, default_chain, ContactParams())
        total = sum(n for n, _ in forces)
        assert total == pytest.approx(default_chain.total_mass * 9.8, rel=0.05)


class TestLoadTransfer:
    def test_left_bend_loads_then_unloads_left_foot(self, default_chain: ChainModel) -> None:
        rest = resting_state(default_chain, settle=0.5)
        (rest_load, _), _ = contact_forces(rest, default_chain, ContactParams())
        pattern = ActuationPattern(frequency=16, duty_left=0.6)
        traj = simulate(default_chain, pattern, 0.5, IntegratorParams(sample_stride=1), initial=rest)
        # skip the first period; drive is on while the left channel sits at full voltage
        late = traj.time > rest.time + pattern.period
        volts = np.array([voltage_at(pattern, "left", t) for t in traj.time])
        bending = late & (volts == pattern.v_high)
        relaxing = late & (volts == 0.0)
        left = traj.foot_normal[:, 0]
        assert left[bending].max() > rest_load
        assert left[relaxing].min() < rest_load


class TestSimulate:
    def test_sample_layout(self, default_chain: ChainModel) -> None:
        traj = simulate(default_chain, None, 0.05, IntegratorParams(sample_stride=30))
        assert len(traj) == 18
        assert traj.time[-1] == pytest.approx(0.05)
        assert np.all(np.diff(traj.time) > 0)

    def test_stride_divides_duration(self, default_chain: ChainModel) -> None:
        traj = simulate(default_chain, None, 0.05, IntegratorParams(sample_stride=20))
        assert len(traj) == 26
        assert np.allclose(np.diff(traj.time), 20 * 1e-4)

    def test_deterministic(self, default_chain: ChainModel) -> None:
        pattern = ActuationPattern(frequency=16, phase_deg=72, duty_left=0.6, duty_right=0.3)
        a = simulate(default_chain, pattern, 0.1)
        b = simulate(default_chain, pattern, 0.1)
        assert np.array_equal(a.coords, b.coords)
        assert np.array_equal(a.foot_tangential, b.foot_tangential)

    def test_forces_stay_in_friction_cone(self, default_chain: ChainModel) -> None:
        pattern = ActuationPattern(frequency=16, duty_left=0.6)
        traj = simulate(default_chain, pattern, 0.3, IntegratorParams(sample_stride=1))
        mu = ContactParams().friction_coefficient
        assert np.all(traj.foot_normal >= 0)
        assert np.all(np.abs(traj.foot_tangential) <= mu * traj.foot_normal + 1e-12)

    def test_vacuum_free_fall(self, default_chain: ChainModel) -> None:
        integ = IntegratorParams(dt=5e-5, sample_stride=100)
        start = initial_state(default_chain, height=0.1)
        traj = simulate(default_chain, None, 0.1, integ, contacts=None, initial=start)
        expected = traj.z_com[0] - 0.5 * 9.8 * 0.1**2
        assert traj.z_com[-1] == pytest.approx(expected, rel=1e-3)
        assert traj.x_com[-1] == pytest.approx(traj.x_com[0], abs=1e-12)

    def test_joint_angles_are_differences(self, default_chain: ChainModel) -> None:
        pattern = ActuationPattern(frequency=16, duty_left=1.0)
        traj = simulate(default_chain, pattern, 0.02, VACUUM, contacts=None)
        phi = traj.coords[-1, 2:]
        assert traj.joint_angles[-1] == pytest.approx(np.diff(phi))

    def test_left_drive_bends_left_joints_concave_down(self, default_chain: ChainModel) -> None:
        pattern = ActuationPattern(frequency=16, duty_left=1.0)
        traj = simulate(default_chain, pattern, 1.0, IntegratorParams(gravity=0.0, sample_stride=100), contacts=None)
        left = traj.joint_angles[-1, default_chain.joints_on("left")]
        right = traj.joint_angles[-1, default_chain.joints_on("right")]
        assert np.all(left > 0.05)
        assert np.all(np.abs(right) < 0.05)

    def test_feet_spacing_at_rest(self, default_chain: ChainModel) -> None:
        traj = simulate(default_chain, None, 0.01, VACUUM, contacts=None)
        assert traj.feet_spacing() == pytest.approx(np.full(len(traj), 0.15))

    def test_csv_header_and_rows(self, default_chain: ChainModel, tmp_path: Path) -> None:
        traj = simulate(default_chain, None, 0.01, IntegratorParams(sample_stride=50))
        out = tmp_path / "traj.csv"
        traj.write_csv(out)
        lines = out.read_text().splitlines()
        header = lines[0].split(",")
        assert header[:4] == ["t", "x_com", "z_com", "theta_1"]
        assert header[12] == "theta_10"
        assert header[13:] == ["foot1_x", "foot1_N", "foot1_Ft", "foot2_x", "foot2_N", "foot2_Ft"]
        assert len(lines) == 1 + len(traj)

    def test_trajectory_state_roundtrip(self, default_chain: ChainModel) -> None:
        traj = simulate(default_chain, None, 0.01, IntegratorParams(sample_stride=10))
        state = traj.state(-1)
        assert state.step == 100
        assert np.array_equal(state.coords, traj.coords[-1])


class TestCheckTimestep:
    def test_non_positive_dt(self) -> None:
        with pytest.raises(InvalidRange):
            check_timestep(IntegratorParams(dt=0.0), ContactParams())

    def test_warns_above_resolution_bound(self, caplog: pytest.LogCaptureFixture) -> None:
        with caplog.at_level(logging.WARNING, logger="vibrosheet.dynamics"):
            check_timestep(IntegratorParams(dt=5e-4), ContactParams())
        assert "resolution bound" in caplog.text

    def test_stiffer_contact_tightens_bound(self, caplog: pytest.LogCaptureFixture) -> None:
        with caplog.at_level(logging.WARNING, logger="vibrosheet.dynamics"):
            check_timestep(IntegratorParams(dt=1e-4), ContactParams(normal_stiffness=50_000))
        assert "resolution bound" in caplog.text

    def test_default_is_quiet(self, caplog: pytest.LogCaptureFixture) -> None:
        with caplog.at_level(logging.WARNING, logger="vibrosheet.dynamics"):
            check_timestep(IntegratorParams(), ContactParams())
            check_timestep(IntegratorParams(dt=1.0), None)
        assert caplog.text == ""


class TestSteadyStateVelocity:
    def test_linear_motion(self) -> None:
        t = np.linspace(0, 10, 1001)
        traj = make_trajectory(t, 0.013 * t, transient=5.0)
        v = steady_state_velocity(traj, ActuationPattern(frequency=16))
        assert v == pytest.approx(0.013)

    def test_stationary(self) -> None:
        t = np.linspace(0, 10, 1001)
        traj = make_trajectory(t, np.full_like(t, 0.02), transient=5.0)
        assert steady_state_velocity(traj, ActuationPattern(frequency=16)) == 0.0

    def test_backward_motion(self) -> None:
        t = np.linspace(0, 10, 1001)
        traj = make_trajectory(t, -0.0005 * t)
        v = steady_state_velocity(traj, ActuationPattern(frequency=16))
        assert 100 * v == pytest.approx(-0.05)

    def test_window_spans_whole_periods(self) -> None:
        # x = t² has mean slope 2·t_mid over a window; 7 Hz fits 35 periods into 5 s
        t = np.linspace(0, 10, 10_001)
        traj = make_trajectory(t, t**2, transient=5.0)
        v = steady_state_velocity(traj, ActuationPattern(frequency=7))
        assert v == pytest.approx(2 * 7.5, rel=1e-6)

    def test_window_too_short(self) -> None:
        t = np.linspace(0, 0.5, 51)
        traj = make_trajectory(t, t)
        with pytest.raises(WindowTooShort):
            steady_state_velocity(traj, ActuationPattern(frequency=16))


class TestStaticEquilibrium:
    def test_both_channels(self, default_chain: ChainModel) -> None:
        assert static_equilibrium(default_chain, 300, 300) == pytest.approx(np.full(10, 0.1))

    def test_zero_voltage(self, default_chain: ChainModel) -> None:
        assert not static_equilibrium(default_chain, 0, 0).any()

    def test_channels_independent(self, default_chain: ChainModel) -> None:
        theta = static_equilibrium(default_chain, 300, 0)
        assert theta[:5] == pytest.approx(np.full(5, 0.1))
        assert not theta[5:].any()

    def test_voltage_clipped_at_drive_rating(self, default_chain: ChainModel) -> None:
        assert static_equilibrium(default_chain, 600, 0)[0] == pytest.approx(0.1)

    def test_damped_limit_matches(self, default_chain: ChainModel) -> None:
        pattern = ActuationPattern(frequency=10, duty_left=1.0, duty_right=1.0)
        traj = simulate(default_chain, pattern, 4.0, IntegratorParams(gravity=0.0, sample_stride=1000), contacts=None)
        expected = static_equilibrium(default_chain, 300, 300)
        assert np.max(np.abs(traj.joint_angles[-1] - expected)) < 1e-4


class TestMechanicalEnergy:
    def test_resting_energy_is_gravitational(self, default_chain: ChainModel) -> None:
        state = initial_state(default_chain)
        solver = chain_solver(default_chain)
        kin = solver.kinematics(state.coords, state.velocities)
        expected = 9.8 * float(solver.masses @ kin.pz)
        assert mechanical_energy(state, default_chain, ContactParams(), IntegratorParams()) == pytest.approx(expected)

    def test_penalty_energy(self, default_chain: ChainModel) -> None:
        state = initial_state(default_chain, height=0.01 - 1e-4)
        with_contact = mechanical_energy(state, default_chain, ContactParams(), VACUUM)
        without = mechanical_energy(state, default_chain, None, VACUUM)
        assert with_contact - without == pytest.approx(2 * 0.5 * 5000 * 1e-8)
