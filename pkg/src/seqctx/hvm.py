"""Finite hidden-variable models for sequential scenarios.

A model has a preparation distribution ``mu`` over ``n`` hidden states, and
for each instrument label a response matrix ``xi[lam, a]`` and a transfer
tensor ``gamma[lam, a, lam']``. A sequence ``A_1..A_N`` produces

    h_S(a_1..a_N) = sum mu(l0) prod_i xi_{A_i}(a_i|l_{i-1}) gamma_{A_i}(l_i|l_{i-1}, a_i)

which already rules out backwards-in-time signalling. The last transfer
sums to one over the final state and is skipped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .empirical import EmpiricalBehaviour
from .scenario import ScenarioError, SequentialScenario, enumerate_global_assignments

DEFAULT_TOL = 1e-9
DETERMINISM_TOL = 1e-12
MAX_LAMBDA = 4096

RESTRICTIONS = ("OD+ND", "OI+ND", "ND")
INSTRUMENT_KINDS = (
    "fair_coin_flip",
    "non_invasive",
    "repeatable_deterministic",
    "random_resampling",
    "deterministic_reset",
)


class HVMShapeError(ValueError):
    """Arrays of a model do not fit together or do not fit the scenario."""


@dataclass(frozen=True, eq=False)
class HiddenVariableModel:
    mu: np.ndarray
    responses: dict[str, np.ndarray]
    transfers: dict[str, np.ndarray]
    max_lambda: int = field(default=MAX_LAMBDA, repr=False)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        n = mu.size
        if n == 0 or n > self.max_lambda:
            raise HVMShapeError(f"hidden variable space of size {n} (cap {self.max_lambda})")
        if set(self.responses) != set(self.transfers):
            raise HVMShapeError("responses and transfers cover different labels")
        responses, transfers = {}, {}
        for label in self.responses:
            xi = np.array(self.responses[label], dtype=float)
            gamma = np.array(self.transfers[label], dtype=float)
            if xi.ndim != 2 or xi.shape[0] != n:
                raise HVMShapeError(f"response of {label!r} has shape {xi.shape}, expected ({n}, k)")
            if gamma.shape != (n, xi.shape[1], n):
                raise HVMShapeError(
                    f"transfer of {label!r} has shape {gamma.shape}, expected {(n, xi.shape[1], n)}"
                )
            xi.flags.writeable = False
            gamma.flags.writeable = False
            responses[str(label)] = xi
            transfers[str(label)] = gamma
        mu.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "transfers", transfers)

    @property
    def lambda_count(self) -> int:
        return self.mu.size

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.responses)

    def n_outcomes(self, label: str) -> int:
        return self._xi(label).shape[1]

    def _xi(self, label):
        try:
            return self.responses[label]
        except KeyError:
            raise HVMShapeError(f"model has no instrument {label!r}") from None

    def _gamma(self, label):
        try:
            return self.transfers[label]
        except KeyError:
            raise HVMShapeError(f"model has no instrument {label!r}") from None

    def replace(self, label: str, response=None, transfer=None) -> "HiddenVariableModel":
        responses = dict(self.responses)
        transfers = dict(self.transfers)
        if response is not None:
            responses[label] = response
        if transfer is not None:
            transfers[label] = transfer
        return HiddenVariableModel(self.mu, responses, transfers, self.max_lambda)


def support_set(h: HiddenVariableModel) -> frozenset[int]:
    return frozenset(int(i) for i in np.nonzero(h.mu > 0)[0])


def validate_hvm(
    h: HiddenVariableModel, scenario: SequentialScenario | None = None, tol: float = DEFAULT_TOL
) -> list[str]:
    """Normalization and positivity problems of ``h`` beyond ``tol``.

    With a scenario, shapes are also checked against it (raising
    ``HVMShapeError``).
    """
    if scenario is not None:
        for x in scenario.labels:
            if x not in h.responses:
                raise HVMShapeError(f"model has no instrument {x!r}")
            if h.n_outcomes(x) != scenario.n_outcomes(x):
                raise HVMShapeError(
                    f"instrument {x!r} has {h.n_outcomes(x)} outcomes, scenario says "
                    f"{scenario.n_outcomes(x)}"
                )
    arrays = [h.mu, *h.responses.values(), *h.transfers.values()]
    if not all(np.all(np.isfinite(a)) for a in arrays):
        return ["model has non-finite entries"]
    problems = []
    if np.any(h.mu < -tol):
        problems.append("preparation has negative weights")
    if abs(h.mu.sum() - 1.0) > tol:
        problems.append(f"preparation sums to {h.mu.sum()!r}")
    for x in h.labels:
        xi, gamma = h.responses[x], h.transfers[x]
        if np.any(xi < -tol):
            problems.append(f"response of {x!r} has negative entries")
        rows = np.nonzero(np.abs(xi.sum(axis=1) - 1.0) > tol)[0]
        for lam in rows:
            problems.append(f"response of {x!r} at hidden state {lam} sums to {xi[lam].sum()!r}")
        if np.any(gamma < -tol):
            problems.append(f"transfer of {x!r} has negative entries")
        sums = gamma.sum(axis=2)
        for lam, a in zip(*np.nonzero(np.abs(sums - 1.0) > tol)):
            problems.append(
                f"transfer of {x!r} from hidden state {lam} on outcome {a} sums to {sums[lam, a]!r}"
            )
    return problems


def sequence_distribution(h: HiddenVariableModel, seq: Sequence[str]) -> np.ndarray:
    """Joint outcome distribution of one sequence, shaped per position."""
    v = h.mu
    for pos, x in enumerate(seq):
        xi, gamma = h._xi(x), h._gamma(x)
        if pos == len(seq) - 1:
            v = np.einsum("...l,la->...a", v, xi)
        else:
            v = np.einsum("...l,la,lam->...am", v, xi, gamma)
    return v


def behaviour(h: HiddenVariableModel, s: SequentialScenario) -> EmpiricalBehaviour:
    tables = []
    for i, seq in enumerate(s.sequences):
        for x in seq:
            if x not in h.responses:
                raise HVMShapeError(f"model has no instrument {x!r}")
        t = sequence_distribution(h, seq)
        if t.shape != s.shape(i):
            raise HVMShapeError(f"sequence {i}: model outcomes {t.shape} vs scenario {s.shape(i)}")
        tables.append(t.reshape(-1))
    return EmpiricalBehaviour(s, tuple(tables))


def check_outcome_determinism(h: HiddenVariableModel, label: str, tol: float = DETERMINISM_TOL) -> bool:
    xi = h._xi(label)
    return bool(np.all(np.minimum(np.abs(xi), np.abs(xi - 1.0)) <= tol))


class DisturbanceCheck(NamedTuple):
    passed: bool
    max_deviation: float


def disturbed_response(h: HiddenVariableModel, a_label: str, b_label: str) -> np.ndarray:
    """Response of ``b`` right after ``a``, as a function of the hidden state."""
    return np.einsum("la,lam,mb->lb", h._xi(a_label), h._gamma(a_label), h._xi(b_label))


def check_no_disturbance(
    h: HiddenVariableModel, a_label: str, b_label: str, tol: float = DEFAULT_TOL
) -> DisturbanceCheck:
    """Whether measuring ``a`` first leaves ``b``'s statistics unchanged at every state."""
    dev = float(np.max(np.abs(disturbed_response(h, a_label, b_label) - h._xi(b_label))))
    return DisturbanceCheck(dev <= tol, dev)


def check_outcome_independence(h: HiddenVariableModel, label: str, tol: float = DETERMINISM_TOL) -> bool:
    gamma = h._gamma(label)
    return bool(np.all(np.abs(gamma - gamma[:, :1, :]) <= tol))


@dataclass
class NDReport:
    passed: bool
    max_deviation: float
    # (sequence index, earlier position, later position, deviation)
    failures: list[tuple[int, int, int, float]]


def check_nd_hvm(h: HiddenVariableModel, s: SequentialScenario, tol: float = DEFAULT_TOL) -> NDReport:
    """Every instrument must not disturb any instrument at a later position.

    Pairs are taken over positions, so a repeated label is also checked
    against itself.
    """
    cache: dict[tuple[str, str], DisturbanceCheck] = {}
    worst = 0.0
    failures = []
    for k, seq in enumerate(s.sequences):
        for i, j in itertools.combinations(range(len(seq)), 2):
            pair = (seq[i], seq[j])
            if pair not in cache:
                cache[pair] = check_no_disturbance(h, *pair, tol=tol)
            res = cache[pair]
            worst = max(worst, res.max_deviation)
            if not res.passed:
                failures.append((k, i, j, res.max_deviation))
    return NDReport(not failures, worst, failures)


def is_outcome_deterministic_hvm(h: HiddenVariableModel, s: SequentialScenario) -> bool:
    return all(check_outcome_determinism(h, x) for x in s.labels)


def is_outcome_independent_hvm(h: HiddenVariableModel, s: SequentialScenario) -> bool:
    return all(check_outcome_independence(h, x) for x in s.labels)


def _deterministic_response(assignment, n_lambda, n_outcomes):
    assignment = np.asarray(assignment)
    if assignment.shape != (n_lambda,):
        raise ValueError(f"assignment needs one outcome per hidden state ({n_lambda})")
    if np.any(assignment < 0) or np.any(assignment >= n_outcomes) or not np.all(
        assignment == assignment.astype(int)
    ):
        raise ValueError(f"assignment values must be outcome indices below {n_outcomes}")
    xi = np.zeros((n_lambda, n_outcomes))
    xi[np.arange(n_lambda), assignment.astype(int)] = 1.0
    return xi


def build_example_instrument(
    kind: str,
    n_lambda: int,
    n_outcomes: int = 2,
    *,
    assignment: Sequence[int] | None = None,
    reset_to: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Response matrix and transfer tensor of a textbook instrument.

    ``fair_coin_flip`` answers uniformly and leaves the state alone.
    ``non_invasive`` and ``random_resampling`` answer by ``assignment`` when
    given (uniformly otherwise). ``repeatable_deterministic`` needs an
    assignment and moves the state uniformly within the outcome's class, so a
    repetition gives the same answer. ``deterministic_reset`` needs
    ``reset_to``.
    """
    if kind not in INSTRUMENT_KINDS:
        raise ValueError(f"unknown instrument kind {kind!r}")
    if n_lambda < 1 or n_outcomes < 1:
        raise ValueError("need at least one hidden state and one outcome")
    identity = np.broadcast_to(np.eye(n_lambda)[:, None, :], (n_lambda, n_outcomes, n_lambda)).copy()
    uniform = np.full((n_lambda, n_outcomes), 1.0 / n_outcomes)
    xi = uniform if assignment is None else _deterministic_response(assignment, n_lambda, n_outcomes)

    if kind == "fair_coin_flip":
        return uniform, identity
    if kind == "non_invasive":
        return xi, identity
    if kind == "random_resampling":
        return xi, np.full((n_lambda, n_outcomes, n_lambda), 1.0 / n_lambda)
    if kind == "deterministic_reset":
        if reset_to is None or not 0 <= reset_to < n_lambda:
            raise ValueError("deterministic_reset needs reset_to inside the hidden state space")
        gamma = np.zeros((n_lambda, n_outcomes, n_lambda))
        gamma[:, :, reset_to] = 1.0
        return xi, gamma
    # repeatable_deterministic
    if assignment is None:
        raise ValueError("repeatable_deterministic needs an assignment")
    assignment = np.asarray(assignment, dtype=int)
    gamma = identity.copy()
    for a in range(n_outcomes):
        members = np.nonzero(assignment == a)[0]
        if members.size:
            gamma[:, a, :] = 0.0
            gamma[:, a, members] = 1.0 / members.size
    return xi, gamma


def build_factorizable_hvm(
    s: SequentialScenario, weights: Sequence[float], tol: float = DEFAULT_TOL
) -> HiddenVariableModel:
    """One hidden state per global assignment, weighted by ``weights``.

    Responses read the assignment; transfers are the identity. The model is
    outcome deterministic, outcome independent and non-disturbing.
    """
    assignments = list(enumerate_global_assignments(s))
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != len(assignments):
        raise ValueError(f"{w.size} weights for {len(assignments)} global assignments")
    if np.any(w < -tol) or abs(w.sum() - 1.0) > tol:
        raise ValueError("weights must form a probability distribution")
    w = np.clip(w, 0.0, None)
    n = len(assignments)
    responses, transfers = {}, {}
    for x in s.labels:
        k = s.n_outcomes(x)
        responses[x] = _deterministic_response([g[x] for g in assignments], n, k)
        transfers[x] = np.broadcast_to(np.eye(n)[:, None, :], (n, k, n))
    return HiddenVariableModel(w, responses, transfers)


def _within_class_permutation(rng, classes):
    perm = np.arange(classes.size)
    for c in np.unique(classes):
        members = np.nonzero(classes == c)[0]
        perm[members] = rng.permutation(members)
    P = np.zeros((classes.size, classes.size))
    P[np.arange(classes.size), perm] = 1.0
    return P


def _class_mixture(rng, classes, n_terms=3):
    """Convex mixture of the identity and within-class permutations."""
    w = rng.dirichlet(np.ones(n_terms + 1))
    G = w[0] * np.eye(classes.size)
    for t in range(n_terms):
        G = G + w[t + 1] * _within_class_permutation(rng, classes)
    return G


def random_restricted_hvm(
    s: SequentialScenario, restriction: str, seed: int, n_lambda: int | None = None
) -> HiddenVariableModel:
    """A random model obeying ``restriction`` by construction.

    Hidden states are grouped into classes that share every response row;
    transfers only move a state inside its class, so no instrument can
    disturb another.

    - ``"ND"``: stochastic responses, outcome-dependent stochastic transfers.
    - ``"OD+ND"``: each class carries a global assignment; transfers are
      outcome-dependent mixtures of within-class permutations.
    - ``"OI+ND"``: stochastic responses; transfers are one mixture of the
      identity and within-class permutations shared by all outcomes.
    """
    if restriction not in RESTRICTIONS:
        raise ValueError(f"restriction must be one of {RESTRICTIONS}")
    rng = np.random.default_rng(seed)
    n = int(n_lambda) if n_lambda is not None else int(rng.integers(2, 17))
    if n < 1:
        raise ValueError("n_lambda must be positive")
    n_classes = int(rng.integers(1, n + 1))
    classes = np.concatenate([np.arange(n_classes), rng.integers(0, n_classes, n - n_classes)])
    rng.shuffle(classes)
    mu = rng.dirichlet(np.ones(n))
    if rng.random() < 0.3:
        mu[rng.random(n) < 0.3] = 0.0
        if mu.sum() == 0:
            mu[0] = 1.0
        mu = mu / mu.sum()

    responses, transfers = {}, {}
    for x in s.labels:
        k = s.n_outcomes(x)
        if restriction == "OD+ND":
            per_class = rng.integers(0, k, n_classes)
            responses[x] = _deterministic_response(per_class[classes], n, k)
        else:
            responses[x] = rng.dirichlet(np.ones(k), size=n_classes)[classes]
        gamma = np.zeros((n, k, n))
        if restriction == "OI+ND":
            gamma[:] = _class_mixture(rng, classes)[:, None, :]
        elif restriction == "OD+ND":
            for a in range(k):
                gamma[:, a, :] = _class_mixture(rng, classes)
        else:
            for lam in range(n):
                members = np.nonzero(classes == classes[lam])[0]
                gamma[lam, :, members] = rng.dirichlet(np.ones(members.size), size=k).T
        transfers[x] = gamma
    return HiddenVariableModel(mu, responses, transfers)


def _binary(h, label):
    if h.n_outcomes(label) != 2:
        raise ValueError(f"instrument {label!r} must have exactly two outcomes")


def p_flip(h: HiddenVariableModel, a_label: str, b_label: str) -> float:
    """Probability that ``b`` answers differently before and after ``a``,
    both read off the same initial hidden state."""
    _binary(h, b_label)
    xa, ga, xb = h._xi(a_label), h._gamma(a_label), h._xi(b_label)
    after = np.einsum("la,lam,mk->lk", xa, ga, xb)  # b's answer after a, per initial state
    return float(np.einsum("l,lk,lk->", h.mu, xb, after[:, ::-1]))


def p_err(h: HiddenVariableModel, a_label: str, b_label: str) -> float:
    """Probability that the two ``b`` outcomes of the sequence b, a, b differ."""
    _binary(h, b_label)
    table = sequence_distribution(h, (b_label, a_label, b_label))
    return float(table[0, :, 1].sum() + table[1, :, 0].sum())


def with_noisy_transfer(
    h: HiddenVariableModel,
    label: str,
    b_label: str,
    eps: float,
    flip_map: Sequence[int],
    tol: float = DEFAULT_TOL,
) -> HiddenVariableModel:
    """Mix ``label``'s transfer with a jump that flips ``b_label``'s answer.

    With probability ``eps`` the state ``lam`` is sent to ``flip_map[lam]``,
    which must carry the reversed binary response of ``b_label``.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    _binary(h, b_label)
    flip_map = np.asarray(flip_map, dtype=int)
    n = h.lambda_count
    if flip_map.shape != (n,) or np.any(flip_map < 0) or np.any(flip_map >= n):
        raise ValueError("flip_map must send every hidden state to a hidden state")
    xb = h._xi(b_label)
    if np.max(np.abs(xb[flip_map] - xb[:, ::-1])) > tol:
        raise ValueError(f"flip_map does not reverse the response of {b_label!r}")
    gamma = h._gamma(label)
    noisy = np.zeros_like(gamma)
    noisy[np.arange(n), :, flip_map] = 1.0
    return h.replace(label, transfer=(1.0 - eps) * gamma + eps * noisy)


def epsilon_noisy_family(eps: float, mu: Sequence[float] | None = None) -> HiddenVariableModel:
    """Two deterministic binary instruments ``A`` and ``B`` whose transfers
    flip ``B``'s answer with probability ``eps``.

    Hidden states are the four pairs ``(a, b)``, index ``2a + b``. Without
    noise the transfers are the identity.
    """
    n = 4
    mu = np.full(n, 0.25) if mu is None else np.asarray(mu, dtype=float)
    a_of = np.array([0, 0, 1, 1])
    b_of = np.array([0, 1, 0, 1])
    xi_a, gamma = build_example_instrument("non_invasive", n, assignment=a_of)
    xi_b, _ = build_example_instrument("non_invasive", n, assignment=b_of)
    h = HiddenVariableModel(mu, {"A": xi_a, "B": xi_b}, {"A": gamma, "B": gamma.copy()})
    flip = 2 * a_of + (1 - b_of)
    h = with_noisy_transfer(h, "A", "B", eps, flip)
    return with_noisy_transfer(h, "B", "B", eps, flip)
