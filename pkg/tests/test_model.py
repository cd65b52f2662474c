"""Core model: received power, trajectory energy integration, serialization."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from uavwpt import (
    DiscreteTrajectory,
    DomainError,
    Fly,
    Hover,
    Trajectory,
    ValidationError,
    energy_along,
    energy_along_discrete,
    fly_leg_energies,
    hover_trajectory,
    received_power,
    scenario_from_json,
    scenario_to_json,
    sum_power,
    trajectory_from_json,
    trajectory_to_json,
    two_er_sum_power,
)

from conftest import BETA0, POWER_W, make_scenario, random_scenario, two_er_scenario


def quad_leg_energy(scn, start, end, speed, k):
    """Independent oracle: adaptive quadrature of the leg power integrand."""
    p0 = np.asarray(start, float)
    leg = np.asarray(end, float) - p0
    length = np.hypot(*leg)
    tau = length / speed
    vel = leg / tau

    def integrand(t):
        p = p0 + vel * t
        return scn.beta0_p / (
            (p[0] - scn.ers[k, 0]) ** 2 + (p[1] - scn.ers[k, 1]) ** 2
            + scn.altitude**2
        )

    value, _ = quad(integrand, 0.0, tau, epsabs=0.0, epsrel=1e-11, limit=200)
    return value


class TestReceivedPower:
    def test_overhead_value(self):
        scn = make_scenario([[0.0, 0.0]])
        assert received_power(scn, (0.0, 0.0), 0) == pytest.approx(4.0e-4, rel=1e-12)

    def test_offset_value(self):
        scn = make_scenario([[0.0, 0.0]])
        # squared distance 9 + 16 plus altitude squared 25
        assert received_power(scn, (3.0, 4.0), 0) == pytest.approx(2.0e-4, rel=1e-12)

    def test_vertical_symmetry(self, rng):
        scn = make_scenario([[2.0, -1.0]])
        for h in rng.uniform(0.1, 10.0, size=20):
            up = received_power(scn, (2.0, -1.0 + h), 0)
            down = received_power(scn, (2.0, -1.0 - h), 0)
            assert up == pytest.approx(down, rel=1e-14)

    def test_maximized_overhead(self, rng):
        scn = make_scenario([[1.0, 3.0]])
        peak = received_power(scn, (1.0, 3.0), 0)
        assert peak == pytest.approx(scn.beta0_p / scn.altitude**2, rel=1e-14)
        for p in rng.uniform(-10, 10, size=(50, 2)):
            assert received_power(scn, p, 0) <= peak + 1e-18

    def test_index_out_of_range(self):
        scn = make_scenario([[0.0, 0.0]])
        with pytest.raises(DomainError):
            received_power(scn, (0.0, 0.0), 1)

    def test_translation_invariance(self, rng):
        ers = rng.uniform(-5, 5, size=(3, 2))
        scn = make_scenario(ers)
        for _ in range(20):
            shift = rng.uniform(-50, 50, size=2)
            moved = make_scenario(ers + shift)
            p = rng.uniform(-5, 5, size=2)
            for k in range(3):
                assert received_power(scn, p, k) == pytest.approx(
                    received_power(moved, p + shift, k), rel=1e-12
                )


class TestSumPower:
    def test_single_er(self):
        scn = make_scenario([[1.0, 2.0]])
        p = (0.5, -0.5)
        assert sum_power(scn, p) == received_power(scn, p, 0)

    def test_matches_two_er_closed_expression(self, rng):
        scn = two_er_scenario(8.0)
        for x in rng.uniform(-6, 6, size=30):
            assert sum_power(scn, (x, 0.0)) == pytest.approx(
                two_er_sum_power(x, 8.0, scn.altitude, scn.beta0_p), rel=1e-13
            )

    def test_matches_term_summation(self, rng):
        scn = random_scenario(rng, 3)
        for p in rng.uniform(0, 20, size=(20, 2)):
            manual = sum(received_power(scn, p, k) for k in range(3))
            assert sum_power(scn, p) == pytest.approx(manual, rel=1e-13)


class TestEnergyAlong:
    def test_pure_hover_overhead(self):
        scn = make_scenario([[2.0, 3.0]], horizon=7.0)
        report = energy_along(scn, hover_trajectory((2.0, 3.0), 7.0))
        assert report.per_er_energy[0] == pytest.approx(
            7.0 * BETA0 * POWER_W / 25.0, rel=1e-13
        )
        assert report.min_energy == report.sum_energy == report.per_er_energy[0]
        assert report.avg_power[0] == pytest.approx(report.per_er_energy[0] / 7.0)

    def test_symmetric_fly_equalizes(self):
        scn = two_er_scenario(6.0)
        traj = Trajectory(
            segments=(Fly(start=(-4.0, 0.0), end=(4.0, 0.0), speed=2.0),)
        )
        report = energy_along(scn, traj)
        assert report.per_er_energy[0] == pytest.approx(
            report.per_er_energy[1], rel=1e-12
        )

    def test_fly_leg_matches_quadrature(self):
        scn = make_scenario([[0.0, 0.0]])
        energy = fly_leg_energies(scn, (-5.0, 0.0), (5.0, 0.0), 1.0)[0]
        assert energy == pytest.approx(
            quad_leg_energy(scn, (-5.0, 0.0), (5.0, 0.0), 1.0, 0), rel=1e-8
        )

    def test_random_legs_match_quadrature(self, rng):
        scn = random_scenario(rng, 3)
        for _ in range(25):
            a = rng.uniform(-30, 30, size=2)
            b = rng.uniform(-30, 30, size=2)
            if np.hypot(*(b - a)) < 1e-6:
                continue
            speed = rng.uniform(0.5, 10.0)
            energies = fly_leg_energies(scn, a, b, speed)
            for k in range(3):
                assert energies[k] == pytest.approx(
                    quad_leg_energy(scn, a, b, speed, k), rel=1e-8
                )

    def test_power_linearity(self, rng):
        scn = random_scenario(rng, 3)
        traj = Trajectory(
            segments=(
                Hover(xy=(5.0, 5.0), duration=2.0),
                Fly(start=(5.0, 5.0), end=(10.0, 8.0), speed=3.0),
            )
        )
        base = energy_along(scn, traj).per_er_energy
        for c in (0.5, 2.0, 7.5):
            scaled = energy_along(scn.replace(tx_power=scn.tx_power * c), traj)
            np.testing.assert_allclose(scaled.per_er_energy, c * base, rtol=1e-13)

    def test_discontinuity_rejected(self):
        scn = two_er_scenario(6.0)
        traj = Trajectory(
            segments=(
                Hover(xy=(0.0, 0.0), duration=1.0),
                Hover(xy=(1.0, 0.0), duration=1.0),
            )
        )
        with pytest.raises(ValidationError):
            energy_along(scn, traj)

    def test_ideal_flag_permits_jumps(self):
        scn = two_er_scenario(6.0)
        traj = Trajectory(
            segments=(
                Hover(xy=(-1.0, 0.0), duration=5.0),
                Hover(xy=(1.0, 0.0), duration=5.0),
            ),
            ideal=True,
        )
        report = energy_along(scn, traj)
        assert report.per_er_energy[0] == pytest.approx(
            report.per_er_energy[1], rel=1e-12
        )

    def test_overspeed_rejected(self):
        scn = two_er_scenario(6.0, max_speed=2.0)
        traj = Trajectory(
            segments=(Fly(start=(-1.0, 0.0), end=(1.0, 0.0), speed=3.0),)
        )
        with pytest.raises(ValidationError):
            energy_along(scn, traj)


class TestEnergyAlongDiscrete:
    def test_single_slot(self):
        scn = make_scenario([[0.0, 0.0]], horizon=4.0)
        dt = DiscreteTrajectory(points=np.array([[1.0, 1.0]]), slot_duration=4.0)
        report = energy_along_discrete(scn, dt)
        assert report.per_er_energy[0] == pytest.approx(
            4.0 * received_power(scn, (1.0, 1.0), 0), rel=1e-14
        )

    def test_constant_points_equal_hover(self):
        scn = make_scenario([[0.0, 0.0], [3.0, 1.0]], horizon=6.0)
        pts = np.tile([1.5, 0.5], (12, 1))
        dt = DiscreteTrajectory(points=pts, slot_duration=0.5)
        hover = energy_along(scn, hover_trajectory((1.5, 0.5), 6.0))
        disc = energy_along_discrete(scn, dt)
        np.testing.assert_allclose(disc.per_er_energy, hover.per_er_energy, rtol=1e-13)

    def test_resummation_oracle(self, rng):
        scn = random_scenario(rng, 4, max_speed=10.0, horizon=5.0)
        n = 50
        slot = scn.horizon / n
        pts = np.zeros((n, 2))
        pts[0] = rng.uniform(0, 20, size=2)
        for i in range(1, n):
            step = rng.uniform(-1, 1, size=2)
            step *= rng.uniform(0, scn.max_speed * slot) / max(np.hypot(*step), 1e-12)
            pts[i] = pts[i - 1] + step
        dt = DiscreteTrajectory(points=pts, slot_duration=slot)
        report = energy_along_discrete(scn, dt)
        for k in range(4):
            manual = sum(
                slot * received_power(scn, pts[i], k) for i in range(n)
            )
            assert report.per_er_energy[k] == pytest.approx(manual, rel=1e-12)

    def test_step_violation_rejected(self):
        scn = make_scenario([[0.0, 0.0]], max_speed=1.0, horizon=2.0)
        pts = np.array([[0.0, 0.0], [5.0, 0.0]])
        dt = DiscreteTrajectory(points=pts, slot_duration=1.0)
        with pytest.raises(ValidationError):
            energy_along_discrete(scn, dt)

    def test_discretization_error_shrinks(self):
        # halving the slot width wrings out the midpoint-rule error monotonically
        scn = make_scenario([[0.0, 0.0]], max_speed=10.0, horizon=10.0)
        leg = Trajectory(segments=(Fly(start=(-5.0, 0.0), end=(5.0, 0.0), speed=1.0),))
        exact = energy_along(scn, leg).per_er_energy[0]
        errors = []
        for m in range(4, 11):
            n = 2**m
            slot = 10.0 / n
            t = (np.arange(n) + 0.5) * slot
            pts = np.column_stack([-5.0 + t, np.zeros(n)])
            dt = DiscreteTrajectory(points=pts, slot_duration=slot)
            disc = energy_along_discrete(scn, dt).per_er_energy[0]
            errors.append(abs(disc - exact))
        assert all(b < a for a, b in zip(errors, errors[1:]))


class TestSerialization:
    def test_scenario_round_trip_and_units(self):
        scn = two_er_scenario(10.0)
        data = scenario_to_json(scn)
        assert data["tx_power_dbm"] == pytest.approx(40.0, abs=1e-12)
        assert data["ref_gain_db"] == pytest.approx(-30.0, abs=1e-12)
        back = scenario_from_json(data)
        np.testing.assert_allclose(back.ers, scn.ers)
        assert back.tx_power == pytest.approx(scn.tx_power, rel=1e-14)
        assert back.ref_gain == pytest.approx(scn.ref_gain, rel=1e-14)

    def test_trajectory_round_trip(self):
        traj = Trajectory(
            segments=(
                Hover(xy=(-4.5, 0.0), duration=4.0),
                Fly(start=(-4.5, 0.0), end=(4.5, 0.0), speed=5.0),
                Hover(xy=(4.5, 0.0), duration=4.0),
            )
        )
        back = trajectory_from_json(trajectory_to_json(traj))
        assert back == traj

    def test_missing_field_raises(self):
        with pytest.raises(ValidationError):
            scenario_from_json({"ers": [[0, 0]]})


class TestScenarioValidation:
    @pytest.mark.parametrize(
        "field,value",
        [
            ("altitude", 0.0),
            ("altitude", -1.0),
            ("tx_power", 0.0),
            ("ref_gain", 0.0),
            ("max_speed", -0.1),
            ("horizon", 0.0),
        ],
    )
    def test_bad_parameters(self, field, value):
        kwargs = dict(
            ers=np.array([[0.0, 0.0]]),
            altitude=5.0,
            tx_power=10.0,
            ref_gain=1e-3,
            max_speed=5.0,
            horizon=10.0,
        )
        kwargs[field] = value
        with pytest.raises(ValidationError):
            make_scenario(
                kwargs.pop("ers"), **{k: v for k, v in kwargs.items()}
            )

    def test_bounding_box(self):
        scn = make_scenario([[1.0, -2.0], [4.0, 5.0], [-3.0, 0.0]])
        assert scn.bounding_box() == (-3.0, 4.0, -2.0, 5.0)
