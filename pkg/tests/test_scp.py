"""SCP refinement: discretization, concave bounds, subproblem, outer loop."""

import math

import numpy as np
import pytest

from uavwpt import (
    DiscreteTrajectory,
    Fly,
    Hover,
    Trajectory,
    ValidationError,
    build_surrogate,
    discretize,
    energy_along,
    energy_along_discrete,
    hover_trajectory,
    scp_optimize,
    solve_minmax_ideal,
    solve_surrogate_subproblem,
    two_er_trajectory,
)

from conftest import make_scenario, random_scenario, two_er_scenario


def slot_energy(scn, p, k, slot):
    d2 = (p[0] - scn.ers[k, 0]) ** 2 + (p[1] - scn.ers[k, 1]) ** 2
    return scn.beta0_p * slot / (d2 + scn.altitude**2)


def surrogate_slot_value(model, p, k, n):
    d2 = (p[0] - model.ers[k, 0]) ** 2 + (p[1] - model.ers[k, 1]) ** 2
    return model.offsets[k, n] - model.coefs[k, n] * (d2 + model.alt_sq)


class TestDiscretize:
    def test_hover_gives_identical_points(self):
        traj = hover_trajectory((2.0, -1.0), 8.0)
        dt = discretize(traj, 16)
        assert dt.slot_duration == pytest.approx(0.5)
        np.testing.assert_allclose(dt.points, np.tile([2.0, -1.0], (16, 1)))

    def test_straight_leg_gives_collinear_equal_spacing(self):
        traj = Trajectory(
            segments=(Fly(start=(0.0, 0.0), end=(8.0, 0.0), speed=2.0),)
        )
        dt = discretize(traj, 8)
        steps = np.diff(dt.points, axis=0)
        np.testing.assert_allclose(steps[:, 0], 1.0, atol=1e-12)
        np.testing.assert_allclose(steps[:, 1], 0.0, atol=1e-12)
        # midpoint sampling starts half a slot in
        assert dt.points[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_hover_fly_hover_energy_close_to_continuous(self):
        scn = two_er_scenario(10.0)
        sol = two_er_trajectory(scn)
        dt = discretize(sol.trajectory, 100)
        cont = energy_along(scn, sol.trajectory).min_energy
        disc = energy_along_discrete(scn, dt).min_energy
        assert abs(disc - cont) / cont < 0.01

    def test_feasible_input_gives_feasible_output(self, rng):
        scn = random_scenario(rng, 2, box=10.0, max_speed=3.0, horizon=9.0)
        traj = Trajectory(
            segments=(
                Hover(xy=(1.0, 1.0), duration=3.0),
                Fly(start=(1.0, 1.0), end=(7.0, 4.0), speed=3.0),
                Hover(xy=(7.0, 4.0), duration=9.0 - 3.0 - np.hypot(6.0, 3.0) / 3.0),
            )
        )
        dt = discretize(traj, 57)
        dt.validate(scn)


class TestSurrogate:
    def test_tight_at_expansion_point(self, rng):
        scn = random_scenario(rng, 3, box=10.0, horizon=5.0)
        pts = rng.uniform(0, 10, size=(20, 2))
        dt = DiscreteTrajectory(points=pts, slot_duration=0.25)
        model = build_surrogate(scn, dt)
        for n in range(20):
            for k in range(3):
                truth = slot_energy(scn, pts[n], k, 0.25)
                approx = surrogate_slot_value(model, pts[n], k, n)
                assert approx == pytest.approx(truth, rel=1e-12)

    def test_global_underestimator(self, rng):
        scn = random_scenario(rng, 3, box=10.0, horizon=5.0)
        anchor = rng.uniform(0, 10, size=(10, 2))
        dt = DiscreteTrajectory(points=anchor, slot_duration=0.5)
        model = build_surrogate(scn, dt)
        for _ in range(200):
            p = rng.uniform(-20, 30, size=2)
            n = rng.integers(0, 10)
            k = rng.integers(0, 3)
            truth = slot_energy(scn, p, k, 0.5)
            approx = surrogate_slot_value(model, p, k, n)
            assert approx <= truth + 1e-12

    def test_gradient_matches_finite_difference_of_truth(self, rng):
        scn = random_scenario(rng, 2, box=10.0, horizon=4.0)
        pts = rng.uniform(1, 9, size=(5, 2))
        dt = DiscreteTrajectory(points=pts, slot_duration=0.8)
        model = build_surrogate(scn, dt)
        eps = 1e-5
        for n in range(5):
            for k in range(2):
                gx_model = -2 * model.coefs[k, n] * (pts[n, 0] - scn.ers[k, 0])
                up = slot_energy(scn, (pts[n, 0] + eps, pts[n, 1]), k, 0.8)
                down = slot_energy(scn, (pts[n, 0] - eps, pts[n, 1]), k, 0.8)
                gx_truth = (up - down) / (2 * eps)
                if abs(gx_truth) > 1e-13:
                    assert gx_model == pytest.approx(gx_truth, rel=1e-5)

    def test_curvature_is_isotropic_negative(self, rng):
        scn = random_scenario(rng, 2, box=10.0, horizon=4.0)
        pts = rng.uniform(0, 10, size=(4, 2))
        dt = DiscreteTrajectory(points=pts, slot_duration=1.0)
        model = build_surrogate(scn, dt)
        # the quadratic term is -coef * |p - er|^2: Hessian -2*coef*I
        assert np.all(model.coefs > 0)


class TestSubproblem:
    def test_huge_speed_moves_each_slot_to_the_maxmin_point(self, rng):
        scn = make_scenario(
            [[0.0, 0.0], [6.0, 0.0]], max_speed=1e6, horizon=4.0
        )
        anchor = np.tile([1.0, 1.0], (8, 1))
        warm = DiscreteTrajectory(points=anchor, slot_duration=0.5)
        model = build_surrogate(scn, warm)
        out = solve_surrogate_subproblem(scn, model, warm)
        # per-slot grid oracle on the surrogate max-min objective
        xs = np.linspace(-2, 8, 401)
        ys = np.linspace(-2, 3, 201)
        gx, gy = np.meshgrid(xs, ys)
        worst = np.full_like(gx, np.inf)
        for k in range(2):
            val = model.offsets[k, 0] - model.coefs[k, 0] * (
                (gx - scn.ers[k, 0]) ** 2 + (gy - scn.ers[k, 1]) ** 2 + model.alt_sq
            )
            worst = np.minimum(worst, val)
        best = np.unravel_index(np.argmax(worst), worst.shape)
        oracle = np.array([gx[best], gy[best]])
        for p in out.points:
            np.testing.assert_allclose(p, oracle, atol=0.05)

    def test_zero_speed_collapses_to_best_constant(self):
        scn = make_scenario([[0.0, 0.0], [4.0, 0.0]], max_speed=0.0, horizon=4.0)
        anchor = np.tile([3.0, 0.0], (8, 1))
        warm = DiscreteTrajectory(points=anchor, slot_duration=0.5)
        model = build_surrogate(scn, warm)
        out = solve_surrogate_subproblem(scn, model, warm)
        assert np.ptp(out.points, axis=0).max() < 1e-9
        assert model.min_value(out.points) >= model.min_value(anchor) - 1e-18

    def test_single_er_improves_toward_overhead(self):
        scn = make_scenario([[5.0, 5.0]], max_speed=2.0, horizon=4.0)
        pts = np.column_stack([np.linspace(0, 2, 8), np.zeros(8)])
        warm = DiscreteTrajectory(points=pts, slot_duration=0.5)
        model = build_surrogate(scn, warm)
        out = solve_surrogate_subproblem(scn, model, warm)
        assert model.min_value(out.points) > model.min_value(pts)
        out.validate(scn, check_horizon=False)

    def test_never_below_warm_start(self, rng):
        scn = random_scenario(rng, 4, box=12.0, max_speed=4.0, horizon=6.0)
        ideal = solve_minmax_ideal(scn)
        from uavwpt import build_hover_fly

        hf = build_hover_fly(scn, ideal.hover_set)
        warm = discretize(hf.trajectory, 120)
        model = build_surrogate(scn, warm)
        out = solve_surrogate_subproblem(scn, model, warm)
        assert model.min_value(out.points) >= model.min_value(warm.points)


class TestScpOptimize:
    def test_bound_chain_each_iteration(self):
        scn = two_er_scenario(10.0, horizon=6.0)
        sol = two_er_trajectory(scn)
        cur = discretize(sol.trajectory, 80)
        for _ in range(3):
            model = build_surrogate(scn, cur)
            true_cur = energy_along_discrete(scn, cur).min_energy
            surr_cur = model.min_value(cur.points)
            nxt = solve_surrogate_subproblem(scn, model, cur)
            surr_next = model.min_value(nxt.points)
            true_next = energy_along_discrete(scn, nxt).min_energy
            scale = abs(true_cur)
            assert surr_cur == pytest.approx(true_cur, abs=1e-10 * max(1, scale))
            assert surr_next >= surr_cur - 1e-10 * scale
            assert true_next >= surr_next - 1e-10 * scale
            cur = nxt

    def test_optimal_seed_terminates_quickly(self):
        scn = two_er_scenario(10.0)
        init = discretize(two_er_trajectory(scn).trajectory, 200)
        state = scp_optimize(scn, init, max_iters=10, rel_tol=1e-6)
        assert state.iteration <= 2
        gain = (state.objective - state.history[0]) / state.history[0]
        assert gain < 1e-3

    def test_monotone_history_and_improvement(self, rng):
        scn = random_scenario(rng, 3, box=12.0, max_speed=4.0, horizon=8.0)
        # seed from a deliberately poor constant path at the box corner
        init = DiscreteTrajectory(
            points=np.tile([0.5, 0.5], (100, 1)), slot_duration=scn.horizon / 100
        )
        state = scp_optimize(scn, init, max_iters=20, rel_tol=1e-6)
        assert all(b >= a for a, b in zip(state.history, state.history[1:]))
        assert state.objective > state.history[0]
        assert state.objective >= energy_along_discrete(scn, init).min_energy

    def test_bounded_by_ideal_certificate(self, rng):
        scn = random_scenario(rng, 3, box=12.0, max_speed=4.0, horizon=8.0)
        ideal = solve_minmax_ideal(scn)
        from uavwpt import build_hover_fly

        hf = build_hover_fly(scn, ideal.hover_set)
        init = discretize(hf.trajectory, 150)
        state = scp_optimize(scn, init, max_iters=15, rel_tol=1e-6)
        assert state.objective <= ideal.upper_bound_certificate + 1e-9

    def test_infeasible_init_rejected(self):
        scn = two_er_scenario(10.0, max_speed=1.0, horizon=2.0)
        bad = DiscreteTrajectory(
            points=np.array([[0.0, 0.0], [5.0, 0.0]]), slot_duration=1.0
        )
        with pytest.raises(ValidationError):
            scp_optimize(scn, bad)

    def test_horizon_mismatch_rejected(self):
        scn = two_er_scenario(10.0, horizon=10.0)
        bad = DiscreteTrajectory(
            points=np.tile([0.0, 0.0], (4, 1)), slot_duration=1.0
        )
        with pytest.raises(ValidationError):
            scp_optimize(scn, bad)
