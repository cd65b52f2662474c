"""Successive convex refinement of a discretized max-min trajectory.

The per-slot received energy is convex in the squared horizontal distance, so
its first-order expansion around the current iterate is a global concave
under-estimator that touches at the expansion point. Maximizing the minimum
(over ERs) of the summed under-estimators subject to the per-slot reach
constraints is convex; doing so repeatedly can only push the true max-min
objective up, and the iteration stops when the gain stalls.

The convex subproblem is solved by projected gradient ascent on an annealed
soft-min smoothing, with feasibility restored by cyclic projection onto the
chained reach balls. A step is accepted only if the true objective does not
decrease, which keeps the monotone-convergence property under inexact solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    DiscreteTrajectory,
    DomainError,
    Scenario,
    Trajectory,
    energy_along_discrete,
)

DEFAULT_REL_TOL = 1e-4
DEFAULT_MAX_ITERS = 30
KKT_TOL = 1e-6
PROJECTION_REL_TOL = 1e-12
SOFTMIN_FLOOR_REL = 1e-6


def default_slots(scn: Scenario) -> int:
    """Slot count keeping per-slot displacement below an eighth of the altitude."""
    return max(100, math.ceil(8.0 * scn.horizon * scn.max_speed / scn.altitude))


def discretize(traj: Trajectory, num_slots: int) -> DiscreteTrajectory:
    """Sample a trajectory at slot midpoints into per-slot positions."""
    if num_slots < 1:
        raise DomainError(f"need at least one slot, got {num_slots}")
    slot = traj.total_duration / num_slots
    points = np.array(
        [traj.position_at((n + 0.5) * slot) for n in range(num_slots)]
    )
    return DiscreteTrajectory(points=points, slot_duration=slot)


@dataclass(frozen=True)
class SurrogateModel:
    """Concave per-slot lower bounds on received energy around an iterate.

    For ER k and slot n the bound is offsets[k, n] minus coefs[k, n] times
    the squared 3D distance from the slot position to the ER; it equals the
    true slot energy at the expansion point and never exceeds it elsewhere.
    """

    ers: np.ndarray          # (K, 2)
    alt_sq: float
    offsets: np.ndarray      # (K, N): twice the slot energy at expansion
    coefs: np.ndarray        # (K, N): slot energy / squared distance, both at expansion

    def per_er_values(self, points: np.ndarray) -> np.ndarray:
        """Summed surrogate energy per ER at given slot positions, shape (K,)."""
        d = points[None, :, :] - self.ers[:, None, :]          # (K, N, 2)
        z = (d * d).sum(axis=2) + self.alt_sq                  # (K, N)
        return (self.offsets - self.coefs * z).sum(axis=1)

    def min_value(self, points: np.ndarray) -> float:
        return float(self.per_er_values(points).min())

    def weighted_gradient(
        self, points: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        """Gradient of sum_k weights[k] * S_k with respect to slot positions."""
        d = points[None, :, :] - self.ers[:, None, :]          # (K, N, 2)
        wc = weights[:, None] * self.coefs                     # (K, N)
        return -2.0 * np.einsum("kn,knd->nd", wc, d)


def build_surrogate(scn: Scenario, iterate: DiscreteTrajectory) -> SurrogateModel:
    """Expand the per-slot energies around an iterate into concave bounds."""
    pts = iterate.points
    d = pts[None, :, :] - scn.ers[:, None, :]                  # (K, N, 2)
    z0 = (d * d).sum(axis=2) + scn.altitude**2                 # (K, N)
    scale = scn.beta0_p * iterate.slot_duration
    return SurrogateModel(
        ers=scn.ers,
        alt_sq=scn.altitude**2,
        offsets=2.0 * scale / z0,
        coefs=scale / (z0 * z0),
    )


def project_chain(
    points: np.ndarray, reach: float, *, max_sweeps: int | None = None
) -> np.ndarray:
    """Restore the per-slot reach constraints by alternating pair projection.

    Odd- and even-indexed consecutive pairs are disjoint, so each parity
    class projects in one vectorized pass: every violated pair is pulled
    symmetrically toward its midpoint. Sweeps repeat until the largest
    violation is negligible relative to the reach. reach == 0 collapses the
    path to its centroid (the exact projection onto constant paths).
    """
    pts = np.array(points, dtype=float)
    n = pts.shape[0]
    if n < 2:
        return pts
    if reach <= 0.0:
        pts[:] = pts.mean(axis=0)
        return pts
    tol = PROJECTION_REL_TOL * reach
    if max_sweeps is None:
        max_sweeps = 100 + 4 * n    # stretch errors diffuse along the chain
    idx_odd = np.arange(1, n, 2)
    idx_even = np.arange(2, n, 2)
    for _ in range(max_sweeps):
        worst = 0.0
        for idx in (idx_odd, idx_even):
            if idx.size == 0:
                continue
            step = pts[idx] - pts[idx - 1]
            dist = np.hypot(step[:, 0], step[:, 1])
            over = dist > reach
            if np.any(over):
                excess = dist[over] - reach
                worst = max(worst, float(excess.max()))
                shift = (0.5 * excess / dist[over])[:, None] * step[over]
                pts[idx[over]] -= shift
                pts[idx[over] - 1] += shift
        if worst <= tol:
            break
    return pts


def _chain_violation(points: np.ndarray, reach: float) -> float:
    if points.shape[0] < 2:
        return 0.0
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return float(max(steps.max() - reach, 0.0))


def _softmin_weights(values: np.ndarray, temp: float) -> np.ndarray:
    shifted = values - values.min()
    w = np.exp(-shifted / temp)
    return w / w.sum()


def _project_to_ball(target: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    d = target - center
    dist = np.hypot(d[:, 0], d[:, 1])
    factor = np.ones_like(dist)
    outside = dist > radius
    factor[outside] = radius / dist[outside]
    return center + factor[:, None] * d


def _project_to_lens(
    target: np.ndarray, left: np.ndarray, right: np.ndarray, radius: float
) -> np.ndarray:
    """Closest points to targets inside both neighbor balls (vectorized).

    The lens is nonempty whenever the neighbors are within 2*radius of each
    other, which the feasible chain guarantees. The optimum is the target
    itself, its projection onto one circle, or a circle intersection point.
    """
    out = target.copy()
    q_left = _project_to_ball(target, left, radius)
    q_right = _project_to_ball(target, right, radius)
    in_left = np.hypot(*(target - left).T) <= radius
    in_right = np.hypot(*(target - right).T) <= radius
    left_ok = np.hypot(*(q_left - right).T) <= radius
    right_ok = np.hypot(*(q_right - left).T) <= radius

    use_left = ~in_left & left_ok
    out[use_left] = q_left[use_left]
    use_right = ~in_right & right_ok & ~use_left
    out[use_right] = q_right[use_right]

    corner = ~(in_left & in_right) & ~use_left & ~use_right
    if np.any(corner):
        cl, cr, tg = left[corner], right[corner], target[corner]
        axis = cr - cl
        d = np.hypot(axis[:, 0], axis[:, 1])
        d = np.maximum(d, 1e-300)
        unit = axis / d[:, None]
        half = np.minimum(d / 2.0, radius)
        h = np.sqrt(np.maximum(radius * radius - half * half, 0.0))
        mid = cl + half[:, None] * unit
        perp = np.column_stack([-unit[:, 1], unit[:, 0]])
        plus = mid + h[:, None] * perp
        minus = mid - h[:, None] * perp
        d_plus = np.hypot(*(plus - tg).T)
        d_minus = np.hypot(*(minus - tg).T)
        out[corner] = np.where((d_plus <= d_minus)[:, None], plus, minus)
    return out


def _constant_point_anneal(
    surrogate: SurrogateModel, start: np.ndarray, floor_rel: float = SOFTMIN_FLOOR_REL
) -> np.ndarray:
    """Max-min optimal single point for a constant path (V=0 or one slot)."""
    osum = surrogate.offsets.sum(axis=1)
    csum = surrogate.coefs.sum(axis=1)

    def values(p: np.ndarray) -> np.ndarray:
        d = p - surrogate.ers
        z = (d * d).sum(axis=1) + surrogate.alt_sq
        return osum - csum * z

    def softmin(p: np.ndarray, temp: float) -> float:
        s = values(p)
        m0 = s.min()
        return float(m0 - temp * math.log(np.exp(-(s - m0) / temp).sum()))

    p = start.copy()
    best_p, best_min = p.copy(), float(values(p).min())
    s = values(p)
    spread = float(s.max() - s.min())
    scale = max(abs(best_min), 1e-300)
    floor = floor_rel * scale
    # start hot enough that the smoothed surface has no captured kinks
    temp = max(2.0 * spread, floor)
    while True:
        for _ in range(200):
            w = _softmin_weights(values(p), temp)
            wc = w * csum
            target = (wc[:, None] * surrogate.ers).sum(axis=0) / wc.sum()
            if math.hypot(*(target - p)) <= 1e-12 * (1.0 + math.hypot(*p)):
                break
            # backtracking toward the weighted centroid: ascent on the
            # smoothed objective is guaranteed for small enough steps
            f0 = softmin(p, temp)
            theta, accepted = 1.0, False
            for _ in range(30):
                trial = p + theta * (target - p)
                if softmin(trial, temp) > f0:
                    p = trial
                    accepted = True
                    break
                theta *= 0.5
            if not accepted:
                break
            v = float(values(p).min())
            if v > best_min:
                best_min, best_p = v, p.copy()
        if temp <= floor:
            break
        temp = max(temp / 2.0, floor * 0.999)
    return best_p


def solve_surrogate_subproblem(
    scn: Scenario,
    surrogate: SurrogateModel,
    warm: DiscreteTrajectory,
    *,
    kkt_tol: float = KKT_TOL,
    max_sweeps_per_level: int | None = None,
) -> DiscreteTrajectory:
    """Maximize the surrogate max-min energy over reach-feasible slot paths.

    The weighted surrogate is separable across slots (only the reach
    constraints couple them), so alternating red-black sweeps move each slot
    exactly to its best position inside the two neighbor balls, in closed
    form. ER weights come from an annealed soft-min of the per-ER surrogate
    energies, refreshed every sweep. Sweeps are always feasible and the best
    true-surrogate iterate seen is returned, so the result never falls below
    the warm start.
    """
    pts = np.array(warm.points, dtype=float)
    n = pts.shape[0]
    reach = scn.max_speed * warm.slot_duration

    if n == 1 or reach <= 0.0:
        anchor = pts.mean(axis=0)
        point = _constant_point_anneal(surrogate, anchor)
        tiled = np.tile(point, (n, 1))
        if surrogate.min_value(tiled) < surrogate.min_value(pts):
            tiled = np.tile(anchor, (n, 1)) if reach <= 0.0 else pts
        return DiscreteTrajectory(points=tiled, slot_duration=warm.slot_duration)

    best_pts = pts.copy()
    best_min = surrogate.min_value(pts)
    s = surrogate.per_er_values(pts)
    spread = float(s.max() - s.min())
    scale = max(abs(best_min), 1e-300)
    floor = SOFTMIN_FLOOR_REL * scale
    # start hot enough that the smoothed surface has no captured kinks
    temp = max(2.0 * spread, floor)

    xmin, xmax, ymin, ymax = scn.bounding_box()
    geom = math.hypot(xmax - xmin, ymax - ymin) + scn.altitude
    span = min(reach, geom)   # stationarity scale when the reach is loose

    even = np.arange(0, n, 2)
    odd = np.arange(1, n, 2)

    def softmin_value(points: np.ndarray, temp: float) -> float:
        s = surrogate.per_er_values(points)
        m0 = s.min()
        return float(m0 - temp * math.log(np.exp(-(s - m0) / temp).sum()))

    def class_targets(idx: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """Per-slot constrained optima for one parity class, neighbors fixed."""
        interior = idx[(idx > 0) & (idx < n - 1)]
        targets = np.empty((idx.size, 2))
        pos = {int(v): i for i, v in enumerate(idx)}
        if interior.size:
            t = _project_to_lens(
                mu[interior], pts[interior - 1], pts[interior + 1], reach
            )
            for v, row in zip(interior, t):
                targets[pos[int(v)]] = row
        for end, nb in ((0, 1), (n - 1, n - 2)):
            if end in pos:
                targets[pos[end]] = _project_to_ball(
                    mu[end][None, :], pts[nb][None, :], reach
                )[0]
        return targets

    while True:
        at_floor = temp <= floor
        if max_sweeps_per_level is not None:
            level_cap = max_sweeps_per_level
        else:
            # spend most of the sweep budget at the final temperature
            level_cap = max(120, n) if at_floor else max(40, n // 2)
        move_tol = kkt_tol * span if at_floor else 1e-3 * span
        for _ in range(level_cap):
            moved = 0.0
            for idx in (even, odd):
                if idx.size == 0:
                    continue
                weights = _softmin_weights(surrogate.per_er_values(pts), temp)
                wc = weights[:, None] * surrogate.coefs          # (K, N)
                a = wc.sum(axis=0)                               # (N,)
                mu = np.einsum("kn,kd->nd", wc, surrogate.ers) / a[:, None]
                targets = class_targets(idx, mu)
                step = targets - pts[idx]
                largest = float(np.hypot(step[:, 0], step[:, 1]).max(initial=0.0))
                if largest <= move_tol:
                    continue
                # the step ascends the smoothed objective for small enough
                # theta, and every theta in (0, 1] stays inside the lenses
                f0 = softmin_value(pts, temp)
                theta = 1.0
                for _ in range(30):
                    trial = pts.copy()
                    trial[idx] = pts[idx] + theta * step
                    if softmin_value(trial, temp) > f0:
                        pts = trial
                        moved = max(moved, theta * largest)
                        break
                    theta *= 0.5
            # coordinated drift: translating every slot together keeps all
            # chain constraints intact and can slide the path along an
            # energy tie that per-slot moves cannot cross
            weights = _softmin_weights(surrogate.per_er_values(pts), temp)
            wc = weights[:, None] * surrogate.coefs
            a = wc.sum(axis=0)
            mu = np.einsum("kn,kd->nd", wc, surrogate.ers) / a[:, None]
            drift = (a[:, None] * (mu - pts)).sum(axis=0) / a.sum()
            drift_len = math.hypot(drift[0], drift[1])
            if drift_len > move_tol:
                f0 = softmin_value(pts, temp)
                theta = 1.0
                for _ in range(30):
                    trial = pts + theta * drift[None, :]
                    if softmin_value(trial, temp) > f0:
                        pts = trial
                        moved = max(moved, theta * drift_len)
                        break
                    theta *= 0.5
            # contraction toward the path centroid shrinks every step length,
            # so it is always feasible; it merges parity classes that have
            # polarized on opposite sides of an energy tie
            pull = pts.mean(axis=0)[None, :] - pts
            pull_len = float(np.hypot(pull[:, 0], pull[:, 1]).max(initial=0.0))
            if pull_len > move_tol:
                f0 = softmin_value(pts, temp)
                theta = 1.0
                for _ in range(30):
                    trial = pts + theta * pull
                    if softmin_value(trial, temp) > f0:
                        pts = trial
                        moved = max(moved, theta * pull_len)
                        break
                    theta *= 0.5
            tmin = surrogate.min_value(pts)
            if tmin > best_min:
                best_min = tmin
                best_pts = pts.copy()
            if moved <= move_tol:
                break
        if at_floor:
            break
        temp = max(temp / 2.0, floor * 0.999)

    if _chain_violation(best_pts, reach) > 1e-9 * max(reach, 1e-300):
        return warm    # defensive: coordinate updates should never violate
    return DiscreteTrajectory(points=best_pts, slot_duration=warm.slot_duration)


@dataclass(frozen=True)
class ScpState:
    """Iterate, true objective, and monotone objective history of a refinement."""

    iterate: DiscreteTrajectory
    objective: float
    iteration: int
    history: tuple[float, ...]
    flags: tuple[str, ...] = ()


def scp_optimize(
    scn: Scenario,
    init: DiscreteTrajectory,
    max_iters: int = DEFAULT_MAX_ITERS,
    rel_tol: float = DEFAULT_REL_TOL,
) -> ScpState:
    """Iteratively lift the true max-min energy from a feasible initial path.

    Each round rebuilds the concave under-estimators at the current iterate
    and maximizes them; a round is accepted only if the true discretized
    objective does not decrease. Stops when the relative gain drops below
    `rel_tol` or after `max_iters` rounds.
    """
    init.validate(scn)
    current = init
    objective = energy_along_discrete(scn, current).min_energy
    history = [objective]
    flags: list[str] = []

    for _ in range(max_iters):
        surrogate = build_surrogate(scn, current)
        candidate = solve_surrogate_subproblem(scn, surrogate, current)
        cand_obj = energy_along_discrete(scn, candidate).min_energy
        if cand_obj < objective:
            # the bound chain makes decreases impossible beyond rounding;
            # anything worse means the inexact subproblem solve went wrong
            if cand_obj < objective - 1e-12 * max(1.0, abs(objective)):
                flags.append("step_rejected")
            break
        gain = (cand_obj - objective) / max(abs(objective), 1e-300)
        current, objective = candidate, cand_obj
        history.append(objective)
        if gain < rel_tol:
            break

    return ScpState(
        iterate=current,
        objective=objective,
        iteration=len(history) - 1,
        history=tuple(history),
        flags=tuple(flags),
    )
