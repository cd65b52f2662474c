"""Small dense two-phase simplex for equality-form linear programs.

Solves min c.x subject to A x = b, x >= 0 with b >= 0, via a classic tableau
with Bland's anti-cycling rule, and recovers the optimal basis duals. Sized
for the tiny dense time-sharing programs that arise here (tens of rows and
columns); not a general-purpose LP library.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LpError(RuntimeError):
    """Infeasible, unbounded, or stalled linear program."""


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective: float
    duals: np.ndarray       # y with y.b = objective at optimality
    basis: tuple[int, ...]


def _pivot(tab: np.ndarray, cost: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and tab[i, col] != 0.0:
            tab[i] -= tab[i, col] * tab[row]
    if cost[col] != 0.0:
        cost -= cost[col] * tab[row]
    basis[row] = col


def _iterate(
    tab: np.ndarray,
    cost: np.ndarray,
    basis: list[int],
    allowed: np.ndarray,
    tol: float,
    max_pivots: int,
) -> None:
    m = tab.shape[0]
    for _ in range(max_pivots):
        entering = -1
        for j in range(cost.size - 1):
            if allowed[j] and cost[j] < -tol:
                entering = j      # Bland: smallest eligible index
                break
        if entering < 0:
            return
        leaving = -1
        best_ratio = np.inf
        tie_eps = 1e-12
        for i in range(m):
            a = tab[i, entering]
            if a > tol:
                ratio = tab[i, -1] / a
                if leaving < 0 or ratio < best_ratio - tie_eps:
                    best_ratio = ratio
                    leaving = i
                elif ratio <= best_ratio + tie_eps and basis[i] < basis[leaving]:
                    leaving = i      # Bland tie-break on basis index
        if leaving < 0:
            raise LpError("unbounded linear program")
        _pivot(tab, cost, basis, leaving, entering)
    raise LpError("simplex failed to converge (pivot limit reached)")


def solve_equality_lp(
    c: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    *,
    tol: float = 1e-9,
    max_pivots: int = 10000,
) -> LpSolution:
    """Two-phase simplex for min c.x, A x = b, x >= 0, with b >= 0 row-wise."""
    c = np.asarray(c, dtype=float)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = a.shape
    if b.min() < 0:
        raise ValueError("right-hand side must be nonnegative (flip rows first)")

    # Phase 1: artificial basis, minimize the sum of artificials.
    tab = np.hstack([a, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    phase1 = np.concatenate([np.zeros(n), np.ones(m), [0.0]])
    cost = phase1 - tab.sum(axis=0)
    allowed = np.ones(n + m, dtype=bool)
    _iterate(tab, cost, basis, allowed, tol, max_pivots)
    if -cost[-1] > max(tol, tol * max(1.0, abs(b).max())) * 10:
        raise LpError(f"infeasible linear program (phase-1 residual {-cost[-1]:.3e})")

    # Drive leftover artificials out of the basis where possible.
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if abs(tab[i, j]) > tol:
                    _pivot(tab, cost, basis, i, j)
                    break

    # Phase 2: original objective; artificial columns may not re-enter.
    full_c = np.concatenate([c, np.zeros(m)])
    cost = np.concatenate([full_c, [0.0]])
    for i, bi in enumerate(basis):
        if full_c[bi] != 0.0:
            cost -= full_c[bi] * tab[i]
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    _iterate(tab, cost, basis, allowed, tol, max_pivots)

    x = np.zeros(n)
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = tab[i, -1]
    basis_cols = np.hstack([a, np.eye(m)])[:, basis]
    duals = np.linalg.solve(basis_cols.T, full_c[basis])
    return LpSolution(
        x=x,
        objective=float(c @ x),
        duals=duals,
        basis=tuple(basis),
    )
