"""Quantum instruments, Lüders rule and the KCBS / Peres-Mermin realizations.

Instruments are lists of Kraus operators per outcome; outcome ``a`` maps
``rho`` to ``sum_k K rho K^dagger``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .empirical import EmpiricalBehaviour
from .scenario import (
    KCBS_LABELS,
    PM_LABELS,
    SequentialScenario,
    kcbs_scenario,
    peres_mermin_scenario,
)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10
PROB_THRESHOLD = 1e-12
ND_TOL = 1e-10
MAX_DIM = 64


class QuantumError(ValueError):
    pass


def density_matrix_problems(rho: np.ndarray) -> list[str]:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return [f"density matrix must be square, got shape {rho.shape}"]
    if not np.all(np.isfinite(rho)):
        return ["non-finite entries"]
    # |rho_ij| <= 1 for any density matrix; larger entries could overflow below
    with np.errstate(over="ignore"):
        if not np.max(np.abs(rho), initial=0.0) <= 1.0 + TRACE_TOL:
            return ["entries exceed 1 in magnitude"]
    problems = []
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        problems.append("not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        problems.append(f"trace {np.trace(rho).real!r}")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -PSD_TOL:
        problems.append("not positive semidefinite")
    return problems


def pure_state(vector: Sequence[complex]) -> np.ndarray:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def psd_sqrt(E: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix (tiny negative
    eigenvalues clipped to 0)."""
    H = (E + E.conj().T) / 2
    w, V = np.linalg.eigh(H)
    w = np.where(w < 0, 0.0, w)
    return (V * np.sqrt(w)) @ V.conj().T


@dataclass(frozen=True, eq=False)
class QuantumInstrument:
    kraus: tuple[tuple[np.ndarray, ...], ...]  # kraus[a] = operators of outcome a

    def __post_init__(self):
        ops = tuple(tuple(np.array(K, dtype=complex) for K in outcome) for outcome in self.kraus)
        if not ops or any(len(o) == 0 for o in ops):
            raise QuantumError("every outcome needs at least one Kraus operator")
        d = ops[0][0].shape[0]
        if d > MAX_DIM:
            raise QuantumError(f"dimension {d} exceeds {MAX_DIM}")
        for o in ops:
            for K in o:
                if K.shape != (d, d):
                    raise QuantumError(f"Kraus operator of shape {K.shape}, expected {(d, d)}")
        if not all(np.all(np.isfinite(K)) for o in ops for K in o):
            raise QuantumError("Kraus operators have non-finite entries")
        with np.errstate(over="ignore", invalid="ignore"):
            total = sum(K.conj().T @ K for o in ops for K in o)
            err = np.max(np.abs(total - np.eye(d)))
        # written so that a NaN error also fails
        if not err <= COMPLETENESS_TOL:
            raise QuantumError("Kraus operators are not complete")
        object.__setattr__(self, "kraus", ops)

    @property
    def dim(self) -> int:
        return self.kraus[0][0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.kraus)

    def effect(self, a: int) -> np.ndarray:
        return sum(K.conj().T @ K for K in self.kraus[a])

    def apply(self, a: int, rho: np.ndarray) -> np.ndarray:
        """Unnormalized post-measurement state for outcome ``a``."""
        return sum(K @ rho @ K.conj().T for K in self.kraus[a])


@dataclass(frozen=True, eq=False)
class QuantumRealization:
    state: np.ndarray
    instruments: dict[str, QuantumInstrument]

    def __post_init__(self):
        state = np.array(self.state, dtype=complex)
        problems = density_matrix_problems(state)
        if problems:
            raise QuantumError("invalid input state: " + ", ".join(problems))
        for label, inst in self.instruments.items():
            if inst.dim != state.shape[0]:
                raise QuantumError(f"instrument {label!r} acts on dimension {inst.dim}")
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "instruments", dict(self.instruments))

    @property
    def dim(self) -> int:
        return self.state.shape[0]

    def with_state(self, state: np.ndarray) -> "QuantumRealization":
        return QuantumRealization(state, self.instruments)


def lueders_from_povm(effects: Sequence[np.ndarray]) -> QuantumInstrument:
    """Lüders instrument: outcome ``y`` applies ``sqrt(E_y) . sqrt(E_y)``."""
    effects = [np.asarray(E, dtype=complex) for E in effects]
    for y, E in enumerate(effects):
        if np.max(np.abs(E - E.conj().T)) > HERMITIAN_TOL:
            raise QuantumError(f"effect {y} is not Hermitian")
        if np.linalg.eigvalsh(E).min() < -PSD_TOL:
            raise QuantumError(f"effect {y} is not positive semidefinite")
    d = effects[0].shape[0]
    if np.max(np.abs(sum(effects) - np.eye(d))) > COMPLETENESS_TOL:
        raise QuantumError("effects do not sum to the identity")
    return QuantumInstrument(tuple((psd_sqrt(E),) for E in effects))


def projective_instrument(projectors: Sequence[np.ndarray]) -> QuantumInstrument:
    return lueders_from_povm(projectors)


def apply_instrument(inst: QuantumInstrument, a: int, rho: np.ndarray) -> tuple[float, np.ndarray | None]:
    """Outcome probability and normalized post-state (``None`` if the
    probability is below the threshold)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (inst.dim, inst.dim):
        raise QuantumError(f"state of shape {rho.shape} for an instrument of dimension {inst.dim}")
    out = inst.apply(a, rho)
    p = float(np.trace(out).real)
    if p <= PROB_THRESHOLD:
        return max(p, 0.0), None
    return p, out / p


def sequential_distribution(r: QuantumRealization, seq: Sequence[str]) -> np.ndarray:
    """Joint outcome probabilities of chaining the instruments of ``seq``.

    Branches are propagated unnormalized, so the trace at the end is the
    product of the conditional probabilities; dead branches stay at zero.
    """
    for x in seq:
        if x not in r.instruments:
            raise QuantumError(f"no instrument for {x!r}")
    insts = [r.instruments[x] for x in seq]
    table = np.zeros(tuple(i.n_outcomes for i in insts))

    def walk(depth, rho, prefix):
        inst = insts[depth]
        for a in range(inst.n_outcomes):
            nxt = inst.apply(a, rho)
            if depth + 1 == len(insts):
                table[prefix + (a,)] = max(float(np.trace(nxt).real), 0.0)
            elif np.trace(nxt).real > 0.0:
                walk(depth + 1, nxt, prefix + (a,))

    walk(0, r.state, ())
    return table


def realization_behaviour(r: QuantumRealization, s: SequentialScenario) -> EmpiricalBehaviour:
    return EmpiricalBehaviour(s, tuple(sequential_distribution(r, seq) for seq in s.sequences))


def spanning_states(d: int) -> list[np.ndarray]:
    """``d^2`` density matrices spanning all Hermitian operators."""
    basis = np.eye(d)
    states = [np.outer(basis[i], basis[i]).astype(complex) for i in range(d)]
    for i, j in itertools.combinations(range(d), 2):
        states.append(pure_state(basis[i] + basis[j]))
        states.append(pure_state(basis[i] + 1j * basis[j]))
    return states


class QuantumNDCheck(NamedTuple):
    passed: bool
    max_deviation: float


def check_quantum_nd(
    r: QuantumRealization, a_label: str, b_label: str, tol: float = ND_TOL
) -> QuantumNDCheck:
    """Whether ``a`` can be performed without disturbing ``b``'s statistics,
    tested on a spanning set of input states."""
    A, B = r.instruments[a_label], r.instruments[b_label]
    worst = 0.0
    for rho in spanning_states(r.dim):
        after = sum(A.apply(a, rho) for a in range(A.n_outcomes))
        for b in range(B.n_outcomes):
            dev = abs(np.trace(B.apply(b, after)) - np.trace(B.apply(b, rho)))
            worst = max(worst, float(dev))
    return QuantumNDCheck(worst <= tol, worst)


def hvm_formulas(
    inst: QuantumInstrument, a: int, lam0: Sequence[complex], lam1: Sequence[complex]
) -> tuple[float, float]:
    """Response and transfer values of the pure-state hidden-variable picture.

    ``xi = Tr[I_a(|l0><l0|)]`` and ``gamma = <l1| I_a(|l0><l0|) |l1> / xi``.
    """
    l0 = np.asarray(lam0, dtype=complex).reshape(-1)
    l1 = np.asarray(lam1, dtype=complex).reshape(-1)
    out = inst.apply(a, np.outer(l0, l0.conj()))
    xi = float(np.trace(out).real)
    if xi <= PROB_THRESHOLD:
        raise QuantumError("outcome has zero probability on this hidden state")
    gamma = float((l1.conj() @ (out / xi) @ l1).real)
    return xi, gamma


# KCBS

KCBS_THETA = math.pi / 5


def kcbs_vectors() -> np.ndarray:
    """Rows are the five qutrit vectors nu_0..nu_4."""
    t = KCBS_THETA
    c = math.sqrt(math.cos(t))
    N = math.sqrt(1 + math.cos(t))
    return (
        np.array(
            [
                [1.0, 0.0, c],
                [math.cos(4 * t), math.sin(4 * t), c],
                [math.cos(2 * t), -math.sin(2 * t), c],
                [math.cos(2 * t), math.sin(2 * t), c],
                [math.cos(4 * t), -math.sin(4 * t), c],
            ]
        )
        / N
    )


KCBS_PSI = np.array([0.0, 0.0, 1.0])


def kcbs_realization(state: np.ndarray | None = None) -> QuantumRealization:
    """Projective Lüders instruments on the five KCBS vectors; outcome 0 is
    the projector onto nu_i. Default input is psi = (0, 0, 1)."""
    insts = {}
    for label, v in zip(KCBS_LABELS, kcbs_vectors()):
        P = np.outer(v, v).astype(complex)
        insts[label] = projective_instrument([P, np.eye(3) - P])
    rho = pure_state(KCBS_PSI) if state is None else state
    return QuantumRealization(rho, insts)


def kcbs_expression(e: EmpiricalBehaviour) -> float:
    """Sum over the five sequences of the probability that both outcomes agree."""
    total = 0.0
    for i, seq in enumerate(e.scenario.sequences):
        if len(seq) < 2:
            raise ValueError("KCBS sequences have two positions")
        t = e.shaped(i)
        pair = t.sum(axis=tuple(range(2, t.ndim))) if t.ndim > 2 else t
        total += float(np.trace(pair))
    return total


def kcbs_value(r: QuantumRealization, s: SequentialScenario | None = None) -> float:
    s = kcbs_scenario() if s is None else s
    return kcbs_expression(realization_behaviour(r, s))


KCBS_BOUND = 1.0


# Peres-Mermin

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

PM_OBSERVABLES = {
    "A1": "ZI",
    "A2": "IZ",
    "A3": "ZZ",
    "A4": "IX",
    "A5": "XI",
    "A6": "XX",
    "A7": "ZX",
    "A8": "XZ",
    "A9": "YY",
}

PM_BOUND = 5.0


def pauli_string(word: str) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for ch in word:
        out = np.kron(out, PAULI[ch])
    return out


def pm_observable(label: str) -> np.ndarray:
    return pauli_string(PM_OBSERVABLES[label])


def pm_realization(state: np.ndarray | None = None) -> QuantumRealization:
    """Two-qubit Lüders instruments onto the +1 (outcome 0) and -1
    (outcome 1) eigenspaces of the nine observables. Default input |00>."""
    insts = {}
    for label in PM_LABELS:
        O = pm_observable(label)
        I = np.eye(4)
        insts[label] = projective_instrument([(I + O) / 2, (I - O) / 2])
    if state is None:
        state = pure_state([1, 0, 0, 0])
    return QuantumRealization(state, insts)


def pm_target_sign(seq: Sequence[str]) -> int:
    return -1 if tuple(seq) == ("A3", "A6", "A9") else 1


def pm_expression(e: EmpiricalBehaviour) -> float:
    """Sum over sequences of the probability that the product of the three
    +-1 outcomes equals the target sign (-1 only for A3 A6 A9)."""
    total = 0.0
    for i, seq in enumerate(e.scenario.sequences):
        target = pm_target_sign(seq)
        for k, o in enumerate(e.scenario.joint_outcomes(i)):
            sign = (-1) ** sum(o)
            if sign == target:
                total += float(e.tables[i][k])
    return total


def pm_value(r: QuantumRealization, s: SequentialScenario | None = None) -> float:
    s = peres_mermin_scenario() if s is None else s
    return pm_expression(realization_behaviour(r, s))


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d
