"""Successive hover-and-fly trajectories under the speed limit.

Takes the multi-location hovering plan from the speed-unlimited solver and
makes it flyable: order the locations along a minimum-distance open path,
fly between them at maximum speed, and re-split the leftover time among the
dwells (the fly legs deliver energy too and enter the LP as a baseline).
When the horizon is too short to visit every location, the whole path is
shrunk toward the best single max-min hover point, spatially and in time by
the same factor, so the flight still uses maximum speed throughout. The
two-ER case is handled in closed form and is exactly optimal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gridopt
from .minmax import HoverSet, TimeSharingResult, time_sharing_lp
from .model import (
    DomainError,
    EnergyReport,
    Fly,
    Hover,
    Scenario,
    Segment,
    Trajectory,
    energy_along,
    fly_leg_energies,
    hover_trajectory,
    power_profile,
)
from .pathplan import PathPlan, plan_open_path
from .sumenergy import two_er_closed_form

MIN_HOVER_DURATION = 1e-9   # s, shorter dwells are dropped from the trajectory
MIN_LEG_LENGTH = 1e-12      # m, shorter legs are treated as coincident points


@dataclass(frozen=True)
class FixedPoint:
    """Single hover point maximizing the minimum received power."""

    xy: tuple[float, float]
    min_power: float


@dataclass(frozen=True)
class HoverFlySolution:
    """Flyable max-min trajectory: dwell schedule, flight energy, and regime.

    regime is "full" when the horizon covers the whole path (dwells sum to
    the horizon minus flight time), "scaled" when the path had to be shrunk
    to fit, and "fixed" for the degenerate single-hover fallback.
    """

    trajectory: Trajectory
    durations: np.ndarray
    fly_energy: np.ndarray
    min_energy: float
    regime: str
    report: EnergyReport
    plan: PathPlan | None
    flags: tuple[str, ...] = ()


def solve_fixed_point(scn: Scenario, grid_step: float | None = None) -> FixedPoint:
    """Hover point maximizing the minimum per-ER power (grid + pattern polish)."""
    point, value = gridopt.maximize_min_power(scn, grid_step)
    return FixedPoint(xy=(float(point[0]), float(point[1])), min_power=value)


def _fly_path_segments(
    locations: np.ndarray, order: tuple[int, ...], speed: float
) -> tuple[Segment, ...]:
    segments: list[Segment] = []
    for a, b in zip(order, order[1:]):
        p, q = locations[a], locations[b]
        if math.hypot(q[0] - p[0], q[1] - p[1]) > MIN_LEG_LENGTH:
            segments.append(
                Fly(start=(p[0], p[1]), end=(q[0], q[1]), speed=speed)
            )
    return tuple(segments)


def scale_trajectory(
    path: Trajectory,
    fix: FixedPoint,
    horizon: float,
    t_fly: float,
    *,
    min_vertices: int = 64,
) -> Trajectory:
    """Shrink a max-speed path toward a fixed point to fit a shorter horizon.

    With scaling factor k = horizon / t_fly, every path point p maps to
    fix + k * (p - fix) and the clock compresses by k, so leg speeds are
    preserved exactly. The result is stored as a polyline whose vertices
    include all original corners (so no geometry is cut) plus a uniform
    resampling for downstream integrators.
    """
    if not 0 < horizon < t_fly:
        raise DomainError(
            f"scaling requires 0 < horizon < flight time, got {horizon} vs {t_fly}"
        )
    kappa = horizon / t_fly
    fix_pt = np.asarray(fix.xy, dtype=float)

    corner_times = [0.0]
    acc = 0.0
    for seg in path.segments:
        acc += seg.duration
        corner_times.append(acc)
    resample = max(min_vertices, 32 * (len(path.segments) + 1))
    uniform = np.linspace(0.0, path.total_duration, resample + 1)
    times = np.unique(np.concatenate([np.asarray(corner_times), uniform]))

    vertices = []
    for t in times:
        p = np.asarray(path.position_at(float(t)), dtype=float)
        vertices.append(fix_pt + kappa * (p - fix_pt))

    segments: list[Segment] = []
    for i in range(len(times) - 1):
        dur = kappa * (times[i + 1] - times[i])
        if dur <= 0:
            continue
        p, q = vertices[i], vertices[i + 1]
        length = math.hypot(q[0] - p[0], q[1] - p[1])
        if length <= MIN_LEG_LENGTH:
            segments.append(Hover(xy=(p[0], p[1]), duration=dur))
        else:
            segments.append(
                Fly(start=(p[0], p[1]), end=(q[0], q[1]), speed=length / dur)
            )
    return Trajectory(segments=tuple(segments))


def _single_hover_solution(
    scn: Scenario,
    locations: np.ndarray,
    durations: np.ndarray,
    regime: str,
    plan: PathPlan | None,
    flags: tuple[str, ...] = (),
) -> HoverFlySolution:
    idx = int(np.argmax(durations))
    traj = hover_trajectory(locations[idx], scn.horizon)
    report = energy_along(scn, traj)
    return HoverFlySolution(
        trajectory=traj,
        durations=durations,
        fly_energy=np.zeros(scn.num_ers),
        min_energy=report.min_energy,
        regime=regime,
        report=report,
        plan=plan,
        flags=flags,
    )


def build_hover_fly(
    scn: Scenario,
    hover_set: HoverSet,
    grid_step: float | None = None,
    *,
    rng: np.random.Generator | None = None,
) -> HoverFlySolution:
    """Flyable trajectory through a hovering set, dwells re-optimized by LP.

    With enough time, the UAV follows the shortest open path through the
    locations at maximum speed and the LP splits the remaining horizon among
    dwells, crediting each ER with the energy it already collects in flight.
    With too little time the path is scaled toward the best single max-min
    point. A zero-speed UAV that cannot visit multiple locations falls back
    to the best single hover among them (flagged).
    """
    locations = np.atleast_2d(np.asarray(hover_set.locations, dtype=float))
    n_loc = locations.shape[0]
    if n_loc < 1:
        raise DomainError("hover set must contain at least one location")

    if n_loc == 1:
        report = energy_along(scn, hover_trajectory(locations[0], scn.horizon))
        return HoverFlySolution(
            trajectory=hover_trajectory(locations[0], scn.horizon),
            durations=np.array([scn.horizon]),
            fly_energy=np.zeros(scn.num_ers),
            min_energy=report.min_energy,
            regime="full",
            report=report,
            plan=None,
            flags=(),
        )

    if scn.max_speed == 0.0:
        # cannot move: best single hover among the candidate locations
        mins = np.array(
            [power_profile(scn, p).min() * scn.horizon for p in locations]
        )
        durations = np.zeros(n_loc)
        durations[int(np.argmax(mins))] = scn.horizon
        return _single_hover_solution(
            scn, locations, durations, "fixed", None, flags=("speed_zero_fallback",)
        )

    plan = plan_open_path(locations, scn.max_speed, rng=rng)
    powers = np.array([power_profile(scn, p) for p in locations])

    if scn.horizon >= plan.t_fly:
        fly_segments = _fly_path_segments(locations, plan.order, scn.max_speed)
        fly_energy = np.zeros(scn.num_ers)
        for seg in fly_segments:
            fly_energy += fly_leg_energies(scn, seg.start, seg.end, seg.speed)
        lp: TimeSharingResult = time_sharing_lp(
            powers, scn.horizon - plan.t_fly, fly_energy
        )
        segments: list[Segment] = []
        for i, loc_idx in enumerate(plan.order):
            dwell = lp.durations[loc_idx]
            if dwell >= MIN_HOVER_DURATION:
                p = locations[loc_idx]
                segments.append(Hover(xy=(p[0], p[1]), duration=float(dwell)))
            if i < len(plan.order) - 1:
                p, q = locations[loc_idx], locations[plan.order[i + 1]]
                if math.hypot(q[0] - p[0], q[1] - p[1]) > MIN_LEG_LENGTH:
                    segments.append(
                        Fly(start=(p[0], p[1]), end=(q[0], q[1]), speed=scn.max_speed)
                    )
        traj = Trajectory(segments=tuple(segments))
        report = energy_along(scn, traj)
        return HoverFlySolution(
            trajectory=traj,
            durations=lp.durations,
            fly_energy=fly_energy,
            min_energy=lp.min_energy,
            regime="full",
            report=report,
            plan=plan,
            flags=(),
        )

    # horizon shorter than the flight itself: shrink toward the max-min point
    fix = solve_fixed_point(scn, grid_step)
    path = Trajectory(
        segments=_fly_path_segments(locations, plan.order, scn.max_speed)
    )
    traj = scale_trajectory(path, fix, scn.horizon, plan.t_fly)
    report = energy_along(scn, traj)
    return HoverFlySolution(
        trajectory=traj,
        durations=np.zeros(n_loc),
        fly_energy=report.per_er_energy,
        min_energy=report.min_energy,
        regime="scaled",
        report=report,
        plan=plan,
        flags=(),
    )


def two_er_trajectory(scn: Scenario, *, axis_tol: float = 1e-9) -> HoverFlySolution:
    """Exactly optimal max-min trajectory for two ERs placed at (-D/2, 0), (D/2, 0).

    Below the separation threshold the midpoint hover is optimal for the
    whole horizon. Above it, a horizon too short to connect the two summed-
    power peaks is spent sweeping symmetrically through the midpoint at full
    speed; otherwise the UAV dwells at the two peaks for equal times and
    crosses between them once at full speed.
    """
    if scn.num_ers != 2:
        raise DomainError("two-ER trajectory requires exactly 2 ERs")
    (x1, y1), (x2, y2) = scn.ers
    if abs(y1) > axis_tol or abs(y2) > axis_tol or abs(x1 + x2) > axis_tol:
        raise DomainError("ERs must be symmetric about the origin on the x-axis")
    separation = abs(x2 - x1)
    cf = two_er_closed_form(separation, scn.altitude)

    if separation <= cf.threshold:
        sol = _single_hover_solution(
            scn, np.array([[0.0, 0.0]]), np.array([scn.horizon]), "full", None
        )
        return sol

    xi = cf.xi
    if scn.max_speed == 0.0:
        return _single_hover_solution(
            scn,
            np.array([[0.0, 0.0]]),
            np.array([scn.horizon]),
            "fixed",
            None,
            flags=("speed_zero_fallback",),
        )
    t_fly = 2.0 * xi / scn.max_speed
    locations = np.array([[-xi, 0.0], [xi, 0.0]])
    plan = plan_open_path(locations, scn.max_speed)

    if scn.horizon <= t_fly:
        half = scn.max_speed * scn.horizon / 2.0
        traj = Trajectory(
            segments=(
                Fly(start=(-half, 0.0), end=(half, 0.0), speed=scn.max_speed),
            )
        )
        report = energy_along(scn, traj)
        return HoverFlySolution(
            trajectory=traj,
            durations=np.zeros(2),
            fly_energy=report.per_er_energy,
            min_energy=report.min_energy,
            regime="scaled",
            report=report,
            plan=plan,
            flags=(),
        )

    dwell = (scn.horizon - t_fly) / 2.0
    traj = Trajectory(
        segments=(
            Hover(xy=(-xi, 0.0), duration=dwell),
            Fly(start=(-xi, 0.0), end=(xi, 0.0), speed=scn.max_speed),
            Hover(xy=(xi, 0.0), duration=dwell),
        )
    )
    report = energy_along(scn, traj)
    fly_energy = fly_leg_energies(scn, (-xi, 0.0), (xi, 0.0), scn.max_speed)
    return HoverFlySolution(
        trajectory=traj,
        durations=np.array([dwell, dwell]),
        fly_energy=fly_energy,
        min_energy=report.min_energy,
        regime="full",
        report=report,
        plan=plan,
        flags=(),
    )
