"""Sum-energy-optimal hovering.

Maximizing the total energy delivered to all ERs over the charging period is
solved by hovering at a single fixed point for the whole horizon: any moving
trajectory is dominated by parking at a maximizer of the summed power field.
The general solver grid-scans the ER bounding box and polishes; the
two-receiver case additionally has a closed form, including the separation
threshold beyond which the single midpoint maximizer splits into a symmetric
pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gridopt
from .model import (
    DomainError,
    EnergyReport,
    Scenario,
    Trajectory,
    energy_along,
    hover_trajectory,
    power_profile,
)

CO_OPTIMA_TOL = 1e-12  # W, equivalence threshold between grid maxima


@dataclass(frozen=True)
class HoverPoint:
    """A candidate hovering location with its per-ER powers and summed power."""

    xy: tuple[float, float]
    power_profile: np.ndarray
    objective: float


@dataclass(frozen=True)
class SumEnergySolution:
    """Single-location hovering plan maximizing total delivered energy."""

    hover: HoverPoint
    trajectory: Trajectory
    report: EnergyReport
    co_optima: tuple[HoverPoint, ...]


@dataclass(frozen=True)
class TwoErClosedForm:
    """Closed-form maximizer set of the two-ER summed power along the ER axis."""

    separation: float
    threshold: float
    xi: float
    maximizers: tuple[float, ...]


def two_er_sum_power(x: float, separation: float, altitude: float, beta0_p: float) -> float:
    """Summed received power of two ERs at (-D/2, 0) and (D/2, 0), UAV at (x, 0)."""
    if not altitude > 0:
        raise DomainError(f"altitude must be > 0, got {altitude}")
    half = separation / 2.0
    return beta0_p * (
        1.0 / ((x + half) ** 2 + altitude**2) + 1.0 / ((x - half) ** 2 + altitude**2)
    )


def two_er_closed_form(separation: float, altitude: float) -> TwoErClosedForm:
    """Maximizers of the two-ER summed power: midpoint, or a symmetric pair.

    Below the separation threshold 2H/sqrt(3) the midpoint is the unique
    maximizer. Above it, the summed power develops two equal peaks at +-xi
    with xi < D/2, approaching the ER positions as the separation grows.
    """
    if separation < 0:
        raise DomainError(f"separation must be >= 0, got {separation}")
    if not altitude > 0:
        raise DomainError(f"altitude must be > 0, got {altitude}")
    threshold = 2.0 * altitude / math.sqrt(3.0)
    if separation <= threshold:
        return TwoErClosedForm(
            separation=separation, threshold=threshold, xi=0.0, maximizers=(0.0,)
        )
    d2 = separation * separation
    h2 = altitude * altitude
    xi = math.sqrt(-(d2 / 4.0 + h2) + math.sqrt(d2 * d2 / 4.0 + h2 * d2))
    return TwoErClosedForm(
        separation=separation, threshold=threshold, xi=xi, maximizers=(-xi, xi)
    )


def _hover_point(scn: Scenario, xy: np.ndarray) -> HoverPoint:
    profile = power_profile(scn, xy)
    return HoverPoint(
        xy=(float(xy[0]), float(xy[1])),
        power_profile=profile,
        objective=float(profile.sum()),
    )


def solve_sum_energy(
    scn: Scenario,
    grid_step: float | None = None,
    *,
    tie_tol: float = CO_OPTIMA_TOL,
    grad_tol: float = gridopt.POLISH_GRAD_TOL,
) -> SumEnergySolution:
    """Best single hovering location for total delivered energy.

    Grid scan over the ER bounding box at `grid_step` pitch, then local polish
    of each near-maximal cell. Equivalent maximizers (within `tie_tol` watts,
    at least a grid step apart) are all reported in `co_optima`; the
    lexicographically smallest is the returned hover.
    """
    if grid_step is None:
        grid_step = gridopt.default_grid_step(scn)
    if not grid_step > 0:
        raise DomainError(f"grid_step must be > 0, got {grid_step}")

    spread = np.ptp(scn.ers, axis=0)
    if spread.max() == 0.0:
        # all ERs coincide: hovering overhead is the analytic optimum
        points = scn.ers[:1].astype(float)
    else:
        points, _ = gridopt.maximize_weighted_power(
            scn,
            np.ones(scn.num_ers),
            grid_step,
            tie_tol=tie_tol,
            merge_radius=grid_step,
            grad_tol=grad_tol,
        )
    co_optima = tuple(_hover_point(scn, p) for p in points)
    hover = co_optima[0]
    trajectory = hover_trajectory(hover.xy, scn.horizon)
    report = energy_along(scn, trajectory)
    return SumEnergySolution(
        hover=hover, trajectory=trajectory, report=report, co_optima=co_optima
    )
