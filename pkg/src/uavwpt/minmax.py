"""Max-min-fair hovering via Lagrangian duality (speed limit ignored).

For fixed nonnegative ER weights summing to one, the best the UAV can do is
park at a maximizer of the weighted power field, so the dual objective is the
horizon times that maximum. The dual is convex and is minimized over the
weight simplex with the ellipsoid cutting-plane method; at the optimal
weights the field has a small set of equivalent maximizers, and a
time-sharing LP splits the horizon among them to equalize delivered energy.
Weak duality makes the dual value a certified upper bound on any trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .gridopt import PowerGrid, cluster_best, maximize_weighted_power, polish_weighted_max
from .model import (
    DomainError,
    Hover,
    Scenario,
    Trajectory,
    ValidationError,
    power_profile,
)
from .simplex import solve_equality_lp

SIMPLEX_FEAS_TOL = 1e-9     # for weight vectors supplied by callers
NEAR_OPT_REL = 1e-6         # baseline admission window into the LP
DEFAULT_DUAL_TOL = 1e-5
DEFAULT_GAP_TOL = 1e-3
ADMIT_SLACK_FACTOR = 50.0   # admission widens with the dual's terminal accuracy


@dataclass(frozen=True)
class DualState:
    """Ellipsoid-method state over the weight simplex.

    The simplex is parameterized by its first K-1 coordinates (the last weight
    is one minus their sum) so the ellipsoid stays full-dimensional; `lam` is
    the full K-vector at `ellipsoid_center`.
    """

    lam: np.ndarray
    ellipsoid_center: np.ndarray
    ellipsoid_shape: np.ndarray
    iteration: int
    dual_value: float
    converged: bool


@dataclass(frozen=True)
class HoverSet:
    """Hovering locations with dwell durations achieving the max-min energy."""

    locations: np.ndarray   # (G, 2)
    powers: np.ndarray      # (G, K)
    durations: np.ndarray   # (G,)
    min_energy: float


@dataclass(frozen=True)
class IdealMinMaxSolution:
    """Multi-location hovering plan for the speed-unlimited max-min problem."""

    hover_set: HoverSet
    trajectory: Trajectory
    dual: DualState
    upper_bound_certificate: float
    lp_duals: np.ndarray
    flags: tuple[str, ...]

    @property
    def min_energy(self) -> float:
        return self.hover_set.min_energy


def _validate_weights(lam: np.ndarray, num_ers: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (num_ers,):
        raise DomainError(f"weights must have shape ({num_ers},), got {lam.shape}")
    if abs(lam.sum() - 1.0) > SIMPLEX_FEAS_TOL or lam.min() < -SIMPLEX_FEAS_TOL:
        raise DomainError("weights must lie on the probability simplex")
    return np.clip(lam, 0.0, None)


def weighted_power_argmax(
    scn: Scenario,
    lam: np.ndarray,
    grid_step: float | None = None,
    *,
    rel_slack: float = 0.0,
    grid: PowerGrid | None = None,
) -> np.ndarray:
    """All equivalent maximizers of the weighted power field over the ER box.

    Polished to value stagnation so the returned locations are accurate to
    floating-point, not just to the 1e-9 gradient level.
    """
    lam = _validate_weights(lam, scn.num_ers)
    points, _ = maximize_weighted_power(
        scn, lam, grid_step, rel_slack=rel_slack, grid=grid, grad_tol=0.0
    )
    return points


def _argmax_single(
    scn: Scenario, lam: np.ndarray, grid: PowerGrid
) -> tuple[np.ndarray, float]:
    """One maximizer of the weighted field: best grid cell, then polish.

    Polishes to value stagnation (grad_tol=0): the time-sharing durations
    inherit any asymmetry between equivalent maximizers, so they must be
    located to full floating-point accuracy.
    """
    field = grid.weighted_field(lam)
    vmax = field.max()
    iy, ix = np.nonzero(field == vmax)
    order = np.lexsort((grid.ys[iy], grid.xs[ix]))
    start = grid.point(int(iy[order[0]]), int(ix[order[0]]))
    return polish_weighted_max(scn, lam, start, grad_tol=0.0)


def dual_value_and_subgradient(
    scn: Scenario,
    lam: np.ndarray,
    grid_step: float | None = None,
    *,
    grid: PowerGrid | None = None,
) -> tuple[float, np.ndarray]:
    """Dual objective (horizon times max weighted power) and its subgradient.

    The subgradient is the per-ER energy the UAV would deliver by parking the
    whole horizon at any one maximizer of the weighted field.
    """
    lam = _validate_weights(lam, scn.num_ers)
    if grid is None:
        grid = PowerGrid.build(scn, grid_step)
    point, value = _argmax_single(scn, lam, grid)
    return scn.horizon * value, scn.horizon * power_profile(scn, point)


def default_max_iter(num_ers: int, tol: float) -> int:
    return max(1, math.ceil(2.0 * num_ers * num_ers * math.log(1.0 / tol)))


def solve_dual_ellipsoid(
    scn: Scenario,
    tol: float = DEFAULT_DUAL_TOL,
    grid_step: float | None = None,
    max_iter: int | None = None,
    *,
    grid: PowerGrid | None = None,
) -> DualState:
    """Minimize the dual over the weight simplex with the ellipsoid method.

    Infeasible centers are handled by constraint cuts (coordinate
    nonnegativity, and the all-ones cut for the implicit last weight);
    feasible centers contribute objective cuts. Terminates when the ellipsoid
    localizes the objective within `tol` (relative) or at `max_iter`, in which
    case the best feasible iterate is returned with `converged=False`.
    """
    if scn.num_ers < 2:
        raise DomainError("dual solver requires at least 2 ERs")
    if not (0 < tol < 1):
        raise DomainError(f"tol must be in (0, 1), got {tol}")
    if grid is None:
        grid = PowerGrid.build(scn, grid_step)
    n = scn.num_ers - 1
    center = np.full(n, 1.0 / scn.num_ers)
    shape = float(scn.num_ers) * np.eye(n)
    if max_iter is None:
        max_iter = default_max_iter(scn.num_ers, tol)

    best_f = math.inf
    best_lam = None
    best_center = center.copy()
    best_shape = shape.copy()
    converged = False
    iterations = 0

    for _ in range(max_iter):
        iterations += 1
        neg = np.nonzero(center < 0.0)[0]
        if neg.size:
            g = np.zeros(n)
            g[neg[0]] = -1.0
        elif center.sum() > 1.0:
            g = np.ones(n)
        else:
            lam = np.concatenate([center, [1.0 - center.sum()]])
            point, value = _argmax_single(scn, lam, grid)
            f = scn.horizon * value
            if f < best_f:
                best_f = f
                best_lam = lam
                best_center = center.copy()
                best_shape = shape.copy()
            sub = scn.horizon * power_profile(scn, point)
            g = sub[:n] - sub[n]
            if not np.any(g):
                converged = True   # flat dual (e.g. co-located ERs)
                break
            gamma = math.sqrt(max(float(g @ shape @ g), 0.0))
            if gamma <= tol * abs(best_f):
                converged = True
                break
        if n == 1:
            r = math.sqrt(shape[0, 0])
            center = center - math.copysign(r / 2.0, g[0])
            shape = np.array([[(r / 2.0) ** 2]])
        else:
            gag = float(g @ shape @ g)
            if not (gag > 0.0 and math.isfinite(gag)):
                break              # numerical collapse; best-so-far stands
            direction = (shape @ g) / math.sqrt(gag)
            center = center - direction / (n + 1.0)
            shape = (n * n / (n * n - 1.0)) * (
                shape - (2.0 / (n + 1.0)) * np.outer(direction, direction)
            )
            shape = 0.5 * (shape + shape.T)

    if best_lam is None:
        lam = np.full(scn.num_ers, 1.0 / scn.num_ers)
        point, value = _argmax_single(scn, lam, grid)
        best_f = scn.horizon * value
        best_lam = lam
        best_center = lam[:n].copy()
        best_shape = shape.copy()
        converged = False

    return DualState(
        lam=best_lam,
        ellipsoid_center=best_center,
        ellipsoid_shape=best_shape,
        iteration=iterations,
        dual_value=best_f,
        converged=converged,
    )


class TimeSharingResult(NamedTuple):
    durations: np.ndarray
    min_energy: float
    duals: np.ndarray   # equality-form duals; -duals[:K] are the fairness weights


def time_sharing_lp(
    powers: np.ndarray,
    budget: float,
    base_energy: np.ndarray | None = None,
) -> TimeSharingResult:
    """Split a hovering budget among locations to maximize the minimum energy.

    Maximizes E subject to sum_g tau_g * powers[g, k] + base_energy[k] >= E
    for every ER k, sum_g tau_g = budget, tau >= 0. Solved exactly at a vertex
    by the two-phase simplex; the optimal basis duals come back for
    certification (their first K entries, negated, lie on the simplex and
    witness which ERs pin the optimum).
    """
    powers = np.atleast_2d(np.asarray(powers, dtype=float))
    num_loc, num_er = powers.shape
    if budget < 0:
        raise DomainError(f"budget must be >= 0, got {budget}")
    if powers.min() < 0:
        raise DomainError("powers must be nonnegative")
    base = (
        np.zeros(num_er)
        if base_energy is None
        else np.asarray(base_energy, dtype=float).copy()
    )
    if base.shape != (num_er,):
        raise DomainError(f"base_energy must have shape ({num_er},)")
    if base.min() < 0:
        raise DomainError("base_energy must be nonnegative")

    qscale = float(powers.max())
    if budget == 0.0 or qscale == 0.0:
        j = int(np.argmin(base))
        duals = np.zeros(num_er + 1)
        duals[j] = -1.0
        durations = np.zeros(num_loc)
        if budget > 0:
            durations[0] = budget   # placement is immaterial with zero power
        return TimeSharingResult(
            durations=durations, min_energy=float(base[j]), duals=duals
        )

    escale = budget * qscale
    # variables: tau' (num_loc), E', slacks (num_er); all scaled to O(1)
    ncols = num_loc + 1 + num_er
    a = np.zeros((num_er + 1, ncols))
    b = np.zeros(num_er + 1)
    for k in range(num_er):
        a[k, :num_loc] = -powers[:, k] / qscale
        a[k, num_loc] = 1.0
        a[k, num_loc + 1 + k] = 1.0
        b[k] = base[k] / escale
    a[num_er, :num_loc] = 1.0
    b[num_er] = 1.0
    c = np.zeros(ncols)
    c[num_loc] = -1.0

    sol = solve_equality_lp(c, a, b)
    durations = np.clip(sol.x[:num_loc] * budget, 0.0, None)
    min_energy = float(sol.x[num_loc] * escale)
    duals = np.concatenate([sol.duals[:num_er], [sol.duals[num_er] * qscale]])
    return TimeSharingResult(durations=durations, min_energy=min_energy, duals=duals)


def _admitted_locations(
    scn: Scenario, lam: np.ndarray, grid: PowerGrid, rel_slack: float
) -> tuple[np.ndarray, float]:
    points, values = maximize_weighted_power(
        scn, lam, rel_slack=rel_slack, grid=grid, grad_tol=0.0
    )
    return points, float(values.max())


def solve_minmax_ideal(
    scn: Scenario,
    *,
    tol: float = DEFAULT_DUAL_TOL,
    grid_step: float | None = None,
    duality_gap_tol: float = DEFAULT_GAP_TOL,
    grid: PowerGrid | None = None,
) -> IdealMinMaxSolution:
    """Optimal multi-location hovering for max-min energy, with certificate.

    Composes the ellipsoid dual solve, extraction of the equivalent weighted
    maximizers at the optimal weights, and the time-sharing LP. One
    refinement pass re-extracts locations at the LP's own fairness duals
    (exact for the restricted support), which repairs the admission set when
    the ellipsoid stops just short of the kink. Raises ValidationError if the
    final primal value is not within `duality_gap_tol` (relative) of the dual
    upper bound.
    """
    if scn.num_ers < 2:
        raise DomainError("max-min fairness requires at least 2 ERs")
    if grid is None:
        grid = PowerGrid.build(scn, grid_step)
    dual = solve_dual_ellipsoid(scn, tol=tol, grid=grid)

    # Admission window widens with the dual's terminal accuracy: weights a
    # hair off the kink tilt the equivalent maximizers' values apart.
    slack = max(NEAR_OPT_REL, ADMIT_SLACK_FACTOR * tol)
    points, _ = _admitted_locations(scn, dual.lam, grid, slack)
    powers = np.array([power_profile(scn, p) for p in points])
    lp = time_sharing_lp(powers, scn.horizon)

    # Column-generation refinement: the LP's fairness duals are the exact
    # weights for the restricted support; re-extracting maximizers at them
    # admits any location the first pass missed, until the value stalls.
    fair_used = None
    for _ in range(8):
        fair = np.clip(-lp.duals[: scn.num_ers], 0.0, None)
        if fair.sum() <= 0:
            break
        fair = fair / fair.sum()
        fair_used = fair
        pts2, _ = _admitted_locations(scn, fair, grid, NEAR_OPT_REL)
        merged = np.vstack([points, pts2])
        merged_vals = np.array(
            [float(np.dot(fair, power_profile(scn, p))) for p in merged]
        )
        cand_points, _ = cluster_best(merged, merged_vals, 2.0 * grid.grid_step)
        order = np.lexsort((cand_points[:, 1], cand_points[:, 0]))
        cand_points = cand_points[order]
        cand_powers = np.array([power_profile(scn, p) for p in cand_points])
        cand_lp = time_sharing_lp(cand_powers, scn.horizon)
        if cand_lp.min_energy >= lp.min_energy:
            improved = cand_lp.min_energy > lp.min_energy * (1.0 + 1e-12)
            points, powers, lp = cand_points, cand_powers, cand_lp
            if not improved:
                break
        else:
            break

    keep = lp.durations > 1e-12 * scn.horizon
    if not np.any(keep):
        keep = lp.durations == lp.durations.max()
    locations = points[keep]
    powers = powers[keep]
    durations = lp.durations[keep]
    # re-anchor the dwell total exactly on the horizon
    durations = durations * (scn.horizon / durations.sum())
    min_energy = lp.min_energy

    def dual_bound(lam: np.ndarray) -> float:
        # valid bound for the achieved primal: the inner max must cover the
        # locations the LP actually used, not only this pass's candidates
        _, vmax = _argmax_single(scn, lam, grid)
        vloc = max(float(np.dot(lam, power_profile(scn, p))) for p in locations)
        return scn.horizon * max(vmax, vloc)

    certificate = dual_bound(dual.lam)
    if fair_used is not None:
        certificate = min(certificate, dual_bound(fair_used))

    hover_set = HoverSet(
        locations=locations,
        powers=powers,
        durations=durations,
        min_energy=min_energy,
    )
    trajectory = Trajectory(
        segments=tuple(
            Hover(xy=(float(p[0]), float(p[1])), duration=float(t))
            for p, t in zip(locations, durations)
        ),
        ideal=True,
    )
    flags = []
    if not dual.converged:
        flags.append("dual_not_converged")
    if locations.shape[0] > scn.num_ers:
        flags.append("hover_count_exceeds_er_count")

    gap = (certificate - min_energy) / max(abs(certificate), 1e-300)
    if gap > duality_gap_tol:
        raise ValidationError(
            f"duality gap {gap:.3e} exceeds tolerance {duality_gap_tol:.1e}; "
            "the dual solve or location extraction is under-resolved"
        )
    return IdealMinMaxSolution(
        hover_set=hover_set,
        trajectory=trajectory,
        dual=dual,
        upper_bound_certificate=certificate,
        lp_duals=lp.duals,
        flags=tuple(flags),
    )
