"""The non-contextual polytope and the contextual fraction.

Vertices of the polytope are the deterministic behaviours of global
assignments. The non-contextual fraction of ``e`` is the largest total
weight ``sum(b)`` of a sub-normalized mixture of vertices dominated by
``e``::

    maximize 1.b  subject to  M b <= e,  b >= 0

where ``M`` is the incidence matrix (rows: sequence outcomes, columns:
global assignments).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp
from .empirical import EmpiricalBehaviour, deterministic_model, from_flat
from .hvm import HiddenVariableModel, build_factorizable_hvm
from .scenario import (
    DEFAULT_ASSIGNMENT_CAP,
    GlobalAssignment,
    MeasurementScenario,
    SequentialScenario,
    consistent_projection,
    enumerate_global_assignments,
)

NC_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class IncidenceMatrix:
    matrix: np.ndarray  # int8, rows x columns
    rows: tuple[tuple[int, tuple[int, ...]], ...]  # (sequence index, joint outcome)
    assignments: tuple[GlobalAssignment, ...]


def build_incidence(s: SequentialScenario, cap: int = DEFAULT_ASSIGNMENT_CAP) -> IncidenceMatrix:
    """Entry 1 iff the outcome is consistent and agrees with the assignment."""
    assignments = tuple(enumerate_global_assignments(s, cap=cap))
    rows = []
    for i in range(len(s.sequences)):
        rows.extend((i, o) for o in s.joint_outcomes(i))
    offsets = np.concatenate([[0], np.cumsum([s.table_size(i) for i in range(len(s.sequences))])])
    M = np.zeros((len(rows), len(assignments)), dtype=np.int8)
    for col, g in enumerate(assignments):
        for i, seq in enumerate(s.sequences):
            shape = s.shape(i)
            idx = np.ravel_multi_index(tuple(g[x] for x in seq), shape)
            M[offsets[i] + idx, col] = 1
    return IncidenceMatrix(M, tuple(rows), assignments)


def build_measurement_incidence(m: MeasurementScenario, cap: int = DEFAULT_ASSIGNMENT_CAP) -> np.ndarray:
    """Incidence of a measurement scenario: context outcomes vs global assignments.

    Built directly from context restrictions, without going through any
    sequential scenario.
    """
    assignments = list(enumerate_global_assignments(m, cap=cap))
    blocks = []
    for ctx in m.contexts:
        shape = tuple(len(m.outcomes[x]) for x in ctx)
        block = np.zeros((int(np.prod(shape)), len(assignments)), dtype=np.int8)
        for col, g in enumerate(assignments):
            block[np.ravel_multi_index(tuple(g[x] for x in ctx), shape), col] = 1
        blocks.append(block)
    return np.vstack(blocks)


@dataclass(eq=False)
class CFResult:
    ncf: float
    cf: float
    weights: np.ndarray  # sub-distribution over global assignments
    residual: EmpiricalBehaviour | None
    status: lp.LpStatus
    dual: np.ndarray | None
    incidence: IncidenceMatrix | None = None

    @property
    def optimal(self) -> bool:
        return self.status == lp.LpStatus.OPTIMAL


def _ncf_lp(M: np.ndarray, e_flat: np.ndarray) -> lp.LpSolution:
    program = lp.LinearProgram(np.ones(M.shape[1]), M.astype(float), e_flat)
    return lp.solve(program)


def contextual_fraction(e: EmpiricalBehaviour, incidence: IncidenceMatrix | None = None) -> CFResult:
    """Non-contextual and contextual fraction of ``e`` by linear programming."""
    inc = incidence if incidence is not None else build_incidence(e.scenario)
    flat = e.flat()
    sol = _ncf_lp(inc.matrix, flat)
    if sol.status != lp.LpStatus.OPTIMAL:
        return CFResult(float("nan"), float("nan"), np.zeros(inc.matrix.shape[1]), None,
                        sol.status, None, inc)
    weights = np.clip(sol.x, 0.0, None)
    ncf = float(min(max(weights.sum(), 0.0), 1.0))
    left = 1.0 - ncf
    if left > NC_TOL:
        rest = np.clip(flat - inc.matrix @ weights, 0.0, None) / left
    else:
        rest = np.zeros_like(flat)
    residual = from_flat(e.scenario, rest)
    return CFResult(ncf, 1.0 - ncf, weights, residual, sol.status, sol.dual, inc)


def is_noncontextual(e: EmpiricalBehaviour, tol: float = NC_TOL) -> bool:
    res = contextual_fraction(e)
    if not res.optimal:
        raise RuntimeError(f"LP failed with status {res.status.value}")
    return res.cf <= tol


@dataclass(eq=False)
class NCDecomposition:
    ncf: float
    noncontextual: EmpiricalBehaviour | None  # None when ncf is 0
    residual: EmpiricalBehaviour | None  # None when ncf is 1

    def reconstruct(self) -> np.ndarray:
        out = 0.0
        if self.noncontextual is not None:
            out = out + self.ncf * self.noncontextual.flat()
        if self.residual is not None:
            out = out + (1.0 - self.ncf) * self.residual.flat()
        return np.asarray(out)


def nc_decomposition(e: EmpiricalBehaviour) -> NCDecomposition:
    """Split ``e = ncf * e_nc + (1 - ncf) * e_residual`` with maximal ncf."""
    res = contextual_fraction(e)
    if not res.optimal:
        raise RuntimeError(f"LP failed with status {res.status.value}")
    e_nc = None
    if res.ncf > NC_TOL:
        e_nc = from_flat(e.scenario, res.incidence.matrix @ (res.weights / res.weights.sum()))
    residual = res.residual if res.cf > NC_TOL else None
    return NCDecomposition(res.ncf, e_nc, residual)


def noncontextual_fraction_measurement(m: MeasurementScenario, tables) -> float:
    """NCF of context tables on a measurement scenario."""
    M = build_measurement_incidence(m)
    flat = np.concatenate([np.asarray(t, dtype=float).reshape(-1) for t in tables])
    sol = _ncf_lp(M, flat)
    if sol.status != lp.LpStatus.OPTIMAL:
        raise RuntimeError(f"LP failed with status {sol.status.value}")
    return float(min(max(sol.objective, 0.0), 1.0))


def factorizable_model_of(e: EmpiricalBehaviour, tol: float = NC_TOL) -> HiddenVariableModel:
    """An outcome-deterministic, non-disturbing model realizing an NC ``e``."""
    res = contextual_fraction(e)
    if not res.optimal or res.cf > tol:
        raise ValueError(f"behaviour is not non-contextual (cf={res.cf!r})")
    return build_factorizable_hvm(e.scenario, res.weights / res.weights.sum())


def consistent_rows_mask(inc: IncidenceMatrix, s: SequentialScenario) -> np.ndarray:
    """Boolean mask of incidence rows whose joint outcome is consistent."""
    return np.array([consistent_projection(o, s.sequences[i]) is not None for i, o in inc.rows])


def classical_optimum(
    s: SequentialScenario, expression, sense: str = "max", cap: int = DEFAULT_ASSIGNMENT_CAP
) -> float:
    """Extreme value of a linear ``expression`` over all deterministic behaviours.

    By linearity this is also its extreme value over the non-contextual
    polytope.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    pick = max if sense == "max" else min
    values = (float(expression(deterministic_model(s, g))) for g in enumerate_global_assignments(s, cap=cap))
    return pick(values)
