"""Box-constrained maximization of hover power fields.

Every hovering-location problem in this package reduces to maximizing either a
nonnegative-weighted sum of per-ER power bowls or their pointwise minimum over
the ER bounding box. Both are handled the same way: a dense grid scan narrows
the basins, then a local polish sharpens each candidate to continuous-domain
accuracy. The weighted-sum field is smooth, so the polish is a damped Newton
ascent; the min field is nonsmooth and gets a shrinking pattern search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError, Scenario

DEFAULT_MIN_STEP = 0.05        # m, grid pitch floor
GRID_DIVISIONS = 2000          # box diagonal / divisions = adaptive pitch
TIE_TOL = 1e-12                # W, equal-maximizer detection
POLISH_GRAD_TOL = 1e-9         # W/m, smooth polish stopping
PATTERN_TOL = 1e-9             # m, pattern-search step floor


def default_grid_step(scn: Scenario) -> float:
    xmin, xmax, ymin, ymax = scn.bounding_box()
    diagonal = math.hypot(xmax - xmin, ymax - ymin)
    return max(DEFAULT_MIN_STEP, diagonal / GRID_DIVISIONS)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    if hi - lo <= 0:
        return np.array([lo])
    n = int(math.ceil((hi - lo) / step)) + 1
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class PowerGrid:
    """Per-ER power evaluated on a box grid; reusable across weight vectors."""

    scn: Scenario
    grid_step: float
    xs: np.ndarray
    ys: np.ndarray
    q: np.ndarray       # (K, ny, nx)

    @classmethod
    def build(cls, scn: Scenario, grid_step: float | None = None) -> "PowerGrid":
        step = default_grid_step(scn) if grid_step is None else float(grid_step)
        if not step > 0:
            raise DomainError(f"grid_step must be > 0, got {step}")
        xmin, xmax, ymin, ymax = scn.bounding_box()
        xs = _axis(xmin, xmax, step)
        ys = _axis(ymin, ymax, step)
        h2 = scn.altitude**2
        q = np.empty((scn.num_ers, ys.size, xs.size))
        for k in range(scn.num_ers):
            dx2 = (xs - scn.ers[k, 0]) ** 2
            dy2 = (ys - scn.ers[k, 1]) ** 2
            q[k] = scn.beta0_p / (dy2[:, None] + dx2[None, :] + h2)
        q.setflags(write=False)
        return cls(scn=scn, grid_step=step, xs=xs, ys=ys, q=q)

    def weighted_field(self, weights: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(weights, dtype=float), self.q, axes=1)

    def min_field(self) -> np.ndarray:
        return self.q.min(axis=0)

    def point(self, iy: int, ix: int) -> np.ndarray:
        return np.array([self.xs[ix], self.ys[iy]])


def _weighted_value(scn: Scenario, weights: np.ndarray, p: np.ndarray) -> float:
    d = p - scn.ers
    z = (d * d).sum(axis=1) + scn.altitude**2
    return float(scn.beta0_p * (weights / z).sum())


def _weighted_grad_hess(
    scn: Scenario, weights: np.ndarray, p: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    w = scn.beta0_p * np.asarray(weights, dtype=float)
    d = p - scn.ers                              # (K, 2)
    z = (d * d).sum(axis=1) + scn.altitude**2    # (K,)
    val = float((w / z).sum())
    wz2 = w / (z * z)
    grad = -2.0 * (wz2[:, None] * d).sum(axis=0)
    outer = np.einsum("k,ki,kj->ij", w / (z**3), d, d)
    hess = -2.0 * wz2.sum() * np.eye(2) + 8.0 * outer
    return val, grad, hess


def _clamp(p: np.ndarray, box: tuple[float, float, float, float]) -> np.ndarray:
    return np.array(
        [min(max(p[0], box[0]), box[1]), min(max(p[1], box[2]), box[3])]
    )


def polish_weighted_max(
    scn: Scenario,
    weights: np.ndarray,
    start: np.ndarray,
    *,
    grad_tol: float = POLISH_GRAD_TOL,
    max_iter: int = 100,
) -> tuple[np.ndarray, float]:
    """Sharpen a grid candidate by damped Newton ascent on the weighted field.

    The unconstrained maximizer lies in the ER convex hull, so iterates are
    clamped to the bounding box only as a numerical guard. Degenerate box
    dimensions (all ERs sharing a coordinate) stay fixed.
    """
    box = scn.bounding_box()
    free = np.array([box[1] > box[0], box[3] > box[2]])
    p = _clamp(np.asarray(start, dtype=float), box)
    val = _weighted_value(scn, weights, p)
    for _ in range(max_iter):
        _, grad, hess = _weighted_grad_hess(scn, weights, p)
        grad = np.where(free, grad, 0.0)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= grad_tol:
            break
        step = None
        if free.all():
            try:
                cand = np.linalg.solve(hess, -grad)
                if np.dot(cand, grad) > 0:   # ascent direction only
                    step = cand
            except np.linalg.LinAlgError:
                step = None
        if step is None:
            # gradient ascent scaled so the first trial moves ~one grid cell
            step = grad * (min(scn.altitude, 1.0) / gnorm)
        improved = False
        for _ in range(40):
            trial = _clamp(np.where(free, p + step, p), box)
            tval = _weighted_value(scn, weights, trial)
            if tval > val:
                p, val = trial, tval
                improved = True
                break
            step = step * 0.5
        if not improved:
            break
    return p, val


def _lex_sorted(points: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((points[:, 1], points[:, 0]))
    return points[order], values[order]


def cluster_best(
    points: np.ndarray, values: np.ndarray, radius: float
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy merge: keep the best-valued representative of each radius-ball."""
    order = np.lexsort((points[:, 1], points[:, 0], -values))
    kept_pts: list[np.ndarray] = []
    kept_vals: list[float] = []
    for idx in order:
        p = points[idx]
        if all(np.hypot(*(p - q)) > radius for q in kept_pts):
            kept_pts.append(p)
            kept_vals.append(float(values[idx]))
    return np.array(kept_pts), np.array(kept_vals)


def maximize_weighted_power(
    scn: Scenario,
    weights: np.ndarray,
    grid_step: float | None = None,
    *,
    tie_tol: float = TIE_TOL,
    rel_slack: float = 0.0,
    merge_radius: float | None = None,
    grad_tol: float = POLISH_GRAD_TOL,
    grid: PowerGrid | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """All equivalent maximizers of a weighted power sum over the ER box.

    Returns (points, values) sorted lexicographically by (x, y). A point is
    admitted when its polished value is within `tie_tol` watts of the best, or
    within the relative factor 1/(1+rel_slack) when `rel_slack` > 0. Nearby
    admitted points (within `merge_radius`, default two grid cells) collapse
    to their best representative.
    """
    weights = np.asarray(weights, dtype=float)
    if grid is None:
        grid = PowerGrid.build(scn, grid_step)
    step = grid.grid_step
    if merge_radius is None:
        merge_radius = 2.0 * step

    field = grid.weighted_field(weights)
    vmax = float(field.max())
    floor = vmax - tie_tol
    if rel_slack > 0.0:
        floor = min(floor, vmax / (1.0 + rel_slack))
    iy, ix = np.nonzero(field >= floor)
    cand_pts = np.column_stack([grid.xs[ix], grid.ys[iy]])
    cand_vals = field[iy, ix]
    if cand_pts.shape[0] > 1024:
        top = np.argsort(-cand_vals, kind="stable")[:1024]
        cand_pts, cand_vals = cand_pts[top], cand_vals[top]
    cand_pts, cand_vals = cluster_best(cand_pts, cand_vals, merge_radius)

    polished = np.empty_like(cand_pts)
    pol_vals = np.empty(cand_pts.shape[0])
    for i, p in enumerate(cand_pts):
        polished[i], pol_vals[i] = polish_weighted_max(
            scn, weights, p, grad_tol=grad_tol
        )
    best = float(pol_vals.max())
    floor = best - tie_tol
    if rel_slack > 0.0:
        floor = min(floor, best / (1.0 + rel_slack))
    keep = pol_vals >= floor
    points, values = cluster_best(polished[keep], pol_vals[keep], merge_radius)
    return _lex_sorted(points, values)


def _min_power_value(scn: Scenario, p: np.ndarray) -> float:
    d = p - scn.ers
    z = (d * d).sum(axis=1) + scn.altitude**2
    return float(scn.beta0_p / z.max())


_PATTERN_DIRS = np.array(
    [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
    dtype=float,
)


def maximize_min_power(
    scn: Scenario,
    grid_step: float | None = None,
    *,
    pattern_tol: float = PATTERN_TOL,
    grid: PowerGrid | None = None,
) -> tuple[np.ndarray, float]:
    """Best max-min hover point over the ER box: grid scan + pattern search.

    The pointwise minimum of the power bowls is nonsmooth, so the polish is a
    derivative-free shrinking pattern search seeded at the best grid cell.
    """
    if grid is None:
        grid = PowerGrid.build(scn, grid_step)
    field = grid.min_field()
    vmax = field.max()
    iy, ix = np.nonzero(field == vmax)
    order = np.lexsort((grid.ys[iy], grid.xs[ix]))
    p = grid.point(int(iy[order[0]]), int(ix[order[0]]))

    box = scn.bounding_box()
    val = _min_power_value(scn, p)
    step = grid.grid_step
    while step > pattern_tol:
        moved = False
        for d in _PATTERN_DIRS:
            trial = _clamp(p + step * d, box)
            tval = _min_power_value(scn, trial)
            if tval > val:
                p, val = trial, tval
                moved = True
                break
        if not moved:
            step *= 0.5
    return p, val
