"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Solves ``maximize c.x subject to A x <= b, x >= 0``. Programs here are tiny
(tens of rows, hundreds of columns) and very degenerate, so the solver
favours termination guarantees and an explicit dual certificate over speed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
GAP_TOL = 1e-8


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.ndim != 2:
            A = A.reshape(len(b), len(c))
        if A.shape != (b.size, c.size):
            raise ValueError(f"A has shape {A.shape}, expected {(b.size, c.size)}")
        for name, arr in (("c", c), ("A", A), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None
    dual: np.ndarray | None = None
    iterations: int = 0
    message: str = ""


class _Tableau:
    """Rows ``0..m-1`` are constraints, row ``m`` holds reduced costs."""

    def __init__(self, rows: np.ndarray, rhs: np.ndarray, basis: list[int]):
        m, width = rows.shape
        self.T = np.zeros((m + 1, width + 1))
        self.T[:m, :width] = rows
        self.T[:m, width] = rhs
        self.basis = list(basis)
        self.m = m
        self.width = width

    def set_objective(self, cost: np.ndarray):
        # reduced cost row r_j = c_j - c_B B^-1 A_j; rhs holds -c_B x_B
        self.T[self.m, : self.width] = cost
        self.T[self.m, self.width] = 0.0
        for i, j in enumerate(self.basis):
            if cost[j] != 0.0:
                self.T[self.m] -= cost[j] * self.T[i]

    def pivot(self, row: int, col: int):
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col

    def run(self, allowed: np.ndarray, max_iter: int) -> tuple[str, int]:
        """Maximize the current objective with Bland's rule."""
        T, m = self.T, self.m
        for it in range(max_iter):
            reduced = T[m, : self.width]
            candidates = np.nonzero((reduced > PIVOT_TOL) & allowed)[0]
            if candidates.size == 0:
                return "optimal", it
            col = int(candidates[0])
            column = T[:m, col]
            rows = np.nonzero(column > PIVOT_TOL)[0]
            if rows.size == 0:
                return "unbounded", it
            ratios = T[rows, self.width] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            row = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(row, col)
        return "iteration_limit", max_iter


def solve(p: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Solve ``p``; never reports ``optimal`` without a checked certificate."""
    A, b, c = p.A, p.b, p.c
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    negative = b < 0
    n_art = int(negative.sum())
    width = n + m + n_art
    rows = np.zeros((m, width))
    rows[:, :n] = A
    rows[:, n : n + m] = np.eye(m)
    rhs = b.copy()
    basis = []
    art = n + m
    for i in range(m):
        if negative[i]:
            rows[i] *= -1.0
            rhs[i] *= -1.0
            rows[i, art] = 1.0
            basis.append(art)
            art += 1
        else:
            basis.append(n + i)
    tab = _Tableau(rows, rhs, basis)
    iterations = 0

    if n_art:
        phase1 = np.zeros(width)
        phase1[n + m :] = -1.0
        tab.set_objective(phase1)
        state, it = tab.run(np.ones(width, dtype=bool), max_iter)
        iterations += it
        if state != "optimal":
            return LpSolution(LpStatus.NUMERICAL_FAILURE, iterations=iterations,
                              message=f"phase 1 ended with {state}")
        if -tab.T[m, width] < -FEAS_TOL * max(1.0, np.abs(b).max()):
            return LpSolution(LpStatus.INFEASIBLE, iterations=iterations)
        for i in range(m):
            if tab.basis[i] >= n + m:
                row = tab.T[i, : n + m]
                nz = np.nonzero(np.abs(row) > PIVOT_TOL)[0]
                if nz.size:
                    tab.pivot(i, int(nz[0]))
    allowed = np.zeros(width, dtype=bool)
    allowed[: n + m] = True
    cost = np.zeros(width)
    cost[:n] = c
    tab.set_objective(cost)
    state, it = tab.run(allowed, max_iter)
    iterations += it
    if state == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, iterations=iterations)
    if state != "optimal":
        return LpSolution(LpStatus.NUMERICAL_FAILURE, iterations=iterations,
                          message=f"phase 2 ended with {state}")

    x, y = _refine(A, b, c, tab.basis)
    if x is None or not _certified(A, b, c, x, y):
        # fall back to the raw tableau reading
        x = np.zeros(n + m + n_art)
        for i, j in enumerate(tab.basis):
            x[j] = tab.T[i, width]
        x = x[:n]
        y = -tab.T[m, n : n + m]
        if not _certified(A, b, c, x, y):
            return LpSolution(LpStatus.NUMERICAL_FAILURE, x=x, dual=y, iterations=iterations,
                              message="optimal basis failed certificate checks")
    return LpSolution(LpStatus.OPTIMAL, x=x, objective=float(c @ x), dual=y,
                      iterations=iterations)


def _refine(A, b, c, basis):
    """Recompute primal and dual values from the basis by direct solves."""
    m, n = A.shape
    full = np.hstack([A, np.eye(m)])
    if any(j >= n + m for j in basis):
        return None, None
    B = full[:, basis]
    try:
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, np.concatenate([c, np.zeros(m)])[basis])
    except np.linalg.LinAlgError:
        return None, None
    x = np.zeros(n + m)
    x[basis] = xb
    x = x[:n]
    x[np.abs(x) < 1e-15] = 0.0
    return x, y


def _certified(A, b, c, x, y) -> bool:
    scale = max(1.0, float(np.abs(b).max(initial=0.0)), float(np.abs(c).max(initial=0.0)))
    if np.any(x < -FEAS_TOL) or np.any(A @ x - b > FEAS_TOL * scale):
        return False
    if np.any(y < -FEAS_TOL) or np.any(A.T @ y - c < -FEAS_TOL * scale):
        return False
    return abs(float(c @ x) - float(b @ y)) <= GAP_TOL * scale


def duality_gap(p: LinearProgram, sol: LpSolution) -> float:
    return abs(float(p.c @ sol.x) - float(p.b @ sol.dual))
