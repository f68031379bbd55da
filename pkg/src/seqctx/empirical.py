"""Empirical behaviours: one probability table per sequence.

Tables are flat float64 arrays. A joint outcome ``(o_0, ..., o_{n-1})`` of a
sequence is stored at its row-major index, position 0 most significant, so
``table.reshape(scenario.shape(i))`` gives the per-position view.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .scenario import (
    GlobalAssignment,
    MeasurementScenario,
    ScenarioError,
    SequentialScenario,
    consistent_projection,
)

DEFAULT_TOL = 1e-9


class BehaviourShapeError(ValueError):
    """Tables do not match the scenario they are attached to."""


@dataclass(frozen=True, eq=False)
class EmpiricalBehaviour:
    scenario: SequentialScenario
    tables: tuple[np.ndarray, ...]

    def __post_init__(self):
        tables = tuple(np.array(t, dtype=float).reshape(-1) for t in self.tables)
        if len(tables) != len(self.scenario.sequences):
            raise BehaviourShapeError(
                f"{len(tables)} tables for {len(self.scenario.sequences)} sequences"
            )
        for i, t in enumerate(tables):
            expected = self.scenario.table_size(i)
            if t.size != expected:
                raise BehaviourShapeError(
                    f"table {i} has {t.size} entries, sequence needs {expected}"
                )
            t.flags.writeable = False
        object.__setattr__(self, "tables", tables)

    def shaped(self, seq_index: int) -> np.ndarray:
        return self.tables[seq_index].reshape(self.scenario.shape(seq_index))

    def flat(self) -> np.ndarray:
        """All tables concatenated in sequence order."""
        return np.concatenate(self.tables) if self.tables else np.zeros(0)

    def probability(self, seq_index: int, outcome: Sequence[int]) -> float:
        return float(self.shaped(seq_index)[tuple(outcome)])


def from_flat(scenario: SequentialScenario, flat: np.ndarray) -> EmpiricalBehaviour:
    """Split a concatenated vector back into per-sequence tables."""
    sizes = [scenario.table_size(i) for i in range(len(scenario.sequences))]
    flat = np.asarray(flat, dtype=float)
    if flat.size != sum(sizes):
        raise BehaviourShapeError(f"vector of length {flat.size}, expected {sum(sizes)}")
    cuts = np.cumsum(sizes)[:-1]
    return EmpiricalBehaviour(scenario, tuple(np.split(flat, cuts)))


def validate_behaviour(
    e: EmpiricalBehaviour, tol: float = DEFAULT_TOL, tol_neg: float = 0.0
) -> list[str]:
    """List normalization and negativity violations beyond the tolerances."""
    problems = []
    for i, t in enumerate(e.tables):
        total = float(t.sum())
        if abs(total - 1.0) > tol:
            problems.append(f"table {i} sums to {total!r}")
        low = float(t.min()) if t.size else 0.0
        if low < -tol_neg:
            problems.append(f"table {i} has negative entry {low!r}")
        if not np.all(np.isfinite(t)):
            problems.append(f"table {i} has non-finite entries")
    return problems


def marginal(e: EmpiricalBehaviour, seq_index: int, positions: Iterable[int]) -> np.ndarray:
    """Marginal of one sequence's table on the given positions.

    The result is flat, over the product of the selected positions' outcomes
    in the order the positions are given.
    """
    positions = list(positions)
    n = len(e.scenario.sequences[seq_index])
    if not positions:
        raise ValueError("marginal needs at least one position")
    if len(set(positions)) != len(positions) or not all(0 <= p < n for p in positions):
        raise ValueError(f"invalid positions {positions} for a sequence of length {n}")
    table = e.shaped(seq_index)
    rest = tuple(p for p in range(n) if p not in positions)
    summed = table.sum(axis=rest) if rest else table
    kept = sorted(positions)
    order = [kept.index(p) for p in positions]
    return np.transpose(summed, order).reshape(-1)


@dataclass
class CompatibilityReport:
    passed: bool
    max_deviation: float
    # (label, (seq, pos), (seq, pos), deviation) for every pair beyond tol
    disagreements: list[tuple[str, tuple[int, int], tuple[int, int], float]]


def check_compatibility_of_marginals(
    e: EmpiricalBehaviour, tol: float = DEFAULT_TOL
) -> CompatibilityReport:
    """Compare single-instrument marginals over every occurrence of a label.

    Occurrences are compared across sequences and between repeated
    positions of one sequence.
    """
    occurrences: dict[str, list[tuple[int, int]]] = {}
    for i, seq in enumerate(e.scenario.sequences):
        for pos, x in enumerate(seq):
            occurrences.setdefault(x, []).append((i, pos))
    worst = 0.0
    bad = []
    for label, occ in occurrences.items():
        margs = [marginal(e, i, [pos]) for i, pos in occ]
        for (u, mu), (v, mv) in itertools.combinations(zip(occ, margs), 2):
            dev = float(np.max(np.abs(mu - mv)))
            worst = max(worst, dev)
            if dev > tol:
                bad.append((label, u, v, dev))
    return CompatibilityReport(not bad, worst, bad)


def deterministic_model(s: SequentialScenario, g: GlobalAssignment) -> EmpiricalBehaviour:
    """Point mass, in every sequence, on the outcome that ``g`` fixes."""
    missing = [x for x in s.labels if x not in g]
    if missing:
        raise ScenarioError(f"assignment does not cover {missing}")
    tables = []
    for i, seq in enumerate(s.sequences):
        t = np.zeros(s.shape(i))
        t[tuple(g[x] for x in seq)] = 1.0
        tables.append(t)
    return EmpiricalBehaviour(s, tuple(tables))


def mix(parts: Sequence[tuple[float, EmpiricalBehaviour]], tol: float = DEFAULT_TOL) -> EmpiricalBehaviour:
    """Convex combination of behaviours on one scenario."""
    if not parts:
        raise ValueError("nothing to mix")
    weights = np.array([w for w, _ in parts], dtype=float)
    if np.any(weights < 0):
        raise ValueError("mixing weights must be non-negative")
    if abs(weights.sum() - 1.0) > tol:
        raise ValueError(f"mixing weights sum to {weights.sum()!r}")
    scenario = parts[0][1].scenario
    for _, b in parts[1:]:
        if b.scenario != scenario:
            raise ValueError("behaviours live on different scenarios")
    tables = []
    for i in range(len(scenario.sequences)):
        tables.append(sum(w * b.tables[i] for w, b in parts))
    return EmpiricalBehaviour(scenario, tuple(tables))


def consistent_support_mass(e: EmpiricalBehaviour, seq_index: int) -> float:
    """Probability that a sequence's outcome is consistent."""
    seq = e.scenario.sequences[seq_index]
    table = e.tables[seq_index]
    total = 0.0
    for k, o in enumerate(e.scenario.joint_outcomes(seq_index)):
        if consistent_projection(o, seq) is not None:
            total += table[k]
    return total


def induced_behaviour(
    m: MeasurementScenario, tables: Sequence[np.ndarray], s: SequentialScenario
) -> EmpiricalBehaviour:
    """Carry context tables of ``m`` over to an induced sequential scenario.

    Every sequence of ``s`` must be an ordering of some context of ``m``;
    the matching table is transposed into the sequence's position order.
    """
    by_set = {frozenset(c): (c, np.asarray(t, dtype=float)) for c, t in zip(m.contexts, tables)}
    out = []
    for seq in s.sequences:
        key = frozenset(seq)
        if key not in by_set or len(key) != len(seq):
            raise ScenarioError(f"sequence {list(seq)} is not an ordering of any context")
        ctx, t = by_set[key]
        shaped = t.reshape(tuple(len(m.outcomes[x]) for x in ctx))
        out.append(np.transpose(shaped, [ctx.index(x) for x in seq]).reshape(-1))
    return EmpiricalBehaviour(s, tuple(out))
