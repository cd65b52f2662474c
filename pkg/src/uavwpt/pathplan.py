"""Shortest open path through a set of hovering locations.

Visiting every location exactly once with free endpoints is a closed tour in
disguise: add a dummy node at zero distance from everything, solve the
closed TSP on the augmented set, and drop the two (free) dummy edges. Small
instances get the exact Held-Karp subset dynamic program; larger ones fall
back to nearest-neighbor construction plus full 2-opt descent on the
dummy-closed tour. Ties between equal-length paths break to the
lexicographically smallest permutation, so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError

EXACT_NODE_LIMIT = 16      # Held-Karp up to this many nodes incl. the dummy
_TIE_EPS_REL = 1e-12


@dataclass(frozen=True)
class PathPlan:
    """Visiting order and flight totals for an open multi-point path."""

    order: tuple[int, ...]
    leg_lengths: np.ndarray
    d_fly: float
    t_fly: float


def _distance_matrix(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def _path_length(dist: np.ndarray, order: list[int] | tuple[int, ...]) -> float:
    return float(sum(dist[order[i], order[i + 1]] for i in range(len(order) - 1)))


def _canonical(order: list[int]) -> tuple[int, ...]:
    fwd = tuple(order)
    rev = tuple(reversed(order))
    return min(fwd, rev)


def _held_karp_open(dist: np.ndarray) -> tuple[int, ...]:
    """Exact shortest open path; equivalent to the dummy-closed tour.

    dp[mask][j] is the cost of the cheapest path covering `mask` that starts
    at j (the dummy's zero edges make the start free). Reconstruction walks
    forward choosing the smallest next node consistent with optimality.
    """
    n = dist.shape[0]
    d = dist.tolist()
    full = (1 << n) - 1
    inf = math.inf
    dp = [[inf] * n for _ in range(full + 1)]
    for j in range(n):
        dp[1 << j][j] = 0.0
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        members = [j for j in range(n) if mask & (1 << j)]
        for j in members:
            sub = mask ^ (1 << j)
            row = d[j]
            best = inf
            dsub = dp[sub]
            for v in members:
                if v == j:
                    continue
                cand = row[v] + dsub[v]
                if cand < best:
                    best = cand
            dp[mask][j] = best

    total = min(dp[full])
    eps = _TIE_EPS_REL * max(1.0, total)
    start = min(j for j in range(n) if dp[full][j] <= total + eps)

    order = [start]
    mask, u = full, start
    while len(order) < n:
        sub = mask ^ (1 << u)
        target = dp[mask][u]
        nxt = -1
        for v in range(n):
            if sub & (1 << v) and dist[u, v] + dp[sub][v] <= target + eps:
                nxt = v
                break
        if nxt < 0:   # accumulated-rounding fallback: nearest consistent value
            nxt = min(
                (v for v in range(n) if sub & (1 << v)),
                key=lambda v: (dist[u, v] + dp[sub][v], v),
            )
        order.append(nxt)
        mask, u = sub, nxt
    return _canonical(order)


def _nearest_neighbor(dist: np.ndarray, start: int) -> list[int]:
    n = dist.shape[0]
    order = [start]
    unvisited = set(range(n)) - {start}
    while unvisited:
        u = order[-1]
        nxt = min(unvisited, key=lambda v: (dist[u, v], v))
        order.append(nxt)
        unvisited.remove(nxt)
    return order


def _two_opt_closed(dist0: np.ndarray, tour: list[int]) -> list[int]:
    """Full 2-opt descent on a closed tour (index n = dummy, zero distances)."""
    n = len(tour)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            a, b = tour[i], tour[i + 1]
            for j in range(i + 2, n):
                c, d = tour[j], tour[(j + 1) % n]
                if d == a:
                    continue
                delta = dist0[a, c] + dist0[b, d] - dist0[a, b] - dist0[c, d]
                if delta < -1e-12:
                    tour[i + 1 : j + 1] = reversed(tour[i + 1 : j + 1])
                    improved = True
                    break
            if improved:
                break
    return tour


def _heuristic_open(
    dist: np.ndarray, rng: np.random.Generator | None
) -> tuple[int, ...]:
    n = dist.shape[0]
    padded = np.zeros((n + 1, n + 1))
    padded[:n, :n] = dist
    starts = list(range(n))
    if rng is not None:
        extra = rng.permutation(n)[: min(8, n)]
        starts.extend(int(s) for s in extra)
    best_order: tuple[int, ...] | None = None
    best_len = math.inf
    for start in starts:
        tour = _nearest_neighbor(dist, start) + [n]   # dummy closes the tour
        tour = _two_opt_closed(padded, tour)
        at = tour.index(n)
        open_path = tour[at + 1 :] + tour[:at]
        order = _canonical(open_path)
        length = _path_length(dist, order)
        if length < best_len - 1e-12 or (
            length <= best_len + 1e-12 and (best_order is None or order < best_order)
        ):
            best_len = length
            best_order = order
    assert best_order is not None
    return best_order


def plan_open_path(
    points: np.ndarray,
    speed: float,
    *,
    exact_limit: int = EXACT_NODE_LIMIT,
    rng: np.random.Generator | None = None,
) -> PathPlan:
    """Minimum-distance open path visiting all points, with flight totals.

    Exact (globally minimal) below `exact_limit` nodes counting the dummy;
    nearest-neighbor plus 2-opt beyond that. `rng` adds heuristic restarts
    only; with `rng=None` the result is fully deterministic.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if n < 1:
        raise DomainError("need at least one point to plan a path")
    if not speed > 0:
        raise DomainError(f"speed must be > 0, got {speed}")
    if n == 1:
        return PathPlan(order=(0,), leg_lengths=np.zeros(0), d_fly=0.0, t_fly=0.0)

    dist = _distance_matrix(points)
    if n + 1 <= exact_limit:
        order = _held_karp_open(dist)
    else:
        order = _heuristic_open(dist, rng)
    legs = np.array([dist[order[i], order[i + 1]] for i in range(n - 1)])
    d_fly = float(legs.sum())
    return PathPlan(order=order, leg_lengths=legs, d_fly=d_fly, t_fly=d_fly / speed)
