"""Sequential and measurement scenarios.

A sequential scenario is a set of instrument labels, a list of ordered
sequences of those labels (a label may repeat inside a sequence), and a
finite outcome alphabet for every label. Outcomes are always handled as
indices ``0..k-1`` into the label's alphabet; the alphabet entries are only
display names (e.g. ``(+1, -1)`` for a Pauli observable).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence, Union

DEFAULT_ASSIGNMENT_CAP = 2**24

JointOutcome = tuple[int, ...]
GlobalAssignment = dict[str, int]


class ScenarioError(ValueError):
    """Raised for malformed scenarios or arguments that do not fit one."""


def _freeze_outcomes(outcomes: Mapping[str, Sequence]) -> dict[str, tuple]:
    return {str(k): tuple(v) for k, v in outcomes.items()}


@dataclass(frozen=True, eq=True)
class SequentialScenario:
    """Instrument labels, ordered sequences and outcome alphabets.

    Positions inside a sequence are 0-based. ``index_base`` only records
    how positions are numbered for display and serialization (1 for the
    KCBS example, 0 for Peres-Mermin).
    """

    labels: tuple[str, ...]
    sequences: tuple[tuple[str, ...], ...]
    outcomes: dict[str, tuple] = field(default_factory=dict)
    index_base: int = 0

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(
            self, "sequences", tuple(tuple(str(x) for x in seq) for seq in self.sequences)
        )
        object.__setattr__(self, "outcomes", _freeze_outcomes(self.outcomes))
        object.__setattr__(self, "index_base", int(self.index_base))

    __hash__ = None  # type: ignore[assignment]

    def n_outcomes(self, label: str) -> int:
        try:
            return len(self.outcomes[label])
        except KeyError:
            raise ScenarioError(f"unknown instrument label {label!r}") from None

    def shape(self, seq_index: int) -> tuple[int, ...]:
        """Outcome counts per position of sequence ``seq_index``."""
        return tuple(self.n_outcomes(x) for x in self.sequences[seq_index])

    def table_size(self, seq_index: int) -> int:
        return math.prod(self.shape(seq_index))

    def joint_outcomes(self, seq_index: int) -> Iterator[JointOutcome]:
        """All joint outcomes of a sequence in row-major order."""
        return itertools.product(*(range(k) for k in self.shape(seq_index)))

    def assignment_count(self) -> int:
        return math.prod(len(self.outcomes.get(x, ())) for x in self.labels)


@dataclass(frozen=True, eq=False)
class MeasurementScenario:
    """Labels, maximal contexts (unordered) and outcome alphabets.

    Contexts keep their declaration order so that the default ordering of
    an induced sequential scenario is reproducible; equality compares them
    as sets.
    """

    labels: tuple[str, ...]
    contexts: tuple[tuple[str, ...], ...]
    outcomes: dict[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(
            self, "contexts", tuple(tuple(str(x) for x in c) for c in self.contexts)
        )
        object.__setattr__(self, "outcomes", _freeze_outcomes(self.outcomes))

    def context_sets(self) -> set[frozenset[str]]:
        return {frozenset(c) for c in self.contexts}

    def __eq__(self, other):
        if not isinstance(other, MeasurementScenario):
            return NotImplemented
        return (
            set(self.labels) == set(other.labels)
            and self.context_sets() == other.context_sets()
            and self.outcomes == other.outcomes
        )

    __hash__ = None  # type: ignore[assignment]

    def shape(self, context_index: int) -> tuple[int, ...]:
        return tuple(len(self.outcomes[x]) for x in self.contexts[context_index])


def _check_labels_and_outcomes(labels, outcomes) -> list[str]:
    problems = []
    seen = set()
    for x in labels:
        if not x:
            problems.append("empty instrument label")
        if x in seen:
            problems.append(f"duplicate instrument label {x!r}")
        seen.add(x)
        if x not in outcomes:
            problems.append(f"instrument {x!r} has no outcome set")
        elif len(outcomes[x]) == 0:
            problems.append(f"instrument {x!r} has an empty outcome set")
        elif len(set(map(repr, outcomes[x]))) != len(outcomes[x]):
            problems.append(f"instrument {x!r} has repeated outcome names")
    for x in outcomes:
        if x not in seen:
            problems.append(f"outcome set declared for unknown instrument {x!r}")
    return problems


def validate_scenario(s: SequentialScenario) -> list[str]:
    """Return the list of problems with ``s``; an empty list means valid."""
    problems = _check_labels_and_outcomes(s.labels, s.outcomes)
    known = set(s.labels)
    for i, seq in enumerate(s.sequences):
        if not seq:
            problems.append(f"sequence {i} is empty")
        for pos, x in enumerate(seq):
            if x not in known:
                problems.append(f"sequence {i} position {pos}: unknown instrument {x!r}")
    return problems


def validate_measurement_scenario(m: MeasurementScenario) -> list[str]:
    problems = _check_labels_and_outcomes(m.labels, m.outcomes)
    known = set(m.labels)
    covered = set()
    seen = set()
    for i, ctx in enumerate(m.contexts):
        if not ctx:
            problems.append(f"context {i} is empty")
        if len(set(ctx)) != len(ctx):
            problems.append(f"context {i} lists an instrument twice")
        for x in ctx:
            if x not in known:
                problems.append(f"context {i}: unknown instrument {x!r}")
        key = frozenset(ctx)
        if key in seen:
            problems.append(f"context {i} is declared twice")
        seen.add(key)
        covered |= key
    missing = known - covered
    if missing:
        problems.append(f"contexts do not cover {sorted(missing)}")
    return problems


def base_set(seq: Sequence[str]) -> frozenset[str]:
    """The distinct labels of a sequence, positions dropped."""
    return frozenset(seq)


def consistent_projection(
    outcome: Sequence[int], seq: Sequence[str]
) -> dict[str, int] | None:
    """Project a joint outcome onto the base set of its sequence.

    Returns ``None`` when some label carries different outcomes at two of
    its positions (the outcome is inconsistent).
    """
    if len(outcome) != len(seq):
        raise ScenarioError(
            f"outcome has {len(outcome)} entries but the sequence has {len(seq)} positions"
        )
    projected: dict[str, int] = {}
    for label, value in zip(seq, outcome):
        if projected.setdefault(label, value) != value:
            return None
    return projected


def enumerate_global_assignments(
    s: SequentialScenario | MeasurementScenario, cap: int = DEFAULT_ASSIGNMENT_CAP
) -> Iterator[GlobalAssignment]:
    """Yield every map label -> outcome index, last label varying fastest."""
    count = math.prod(len(s.outcomes[x]) for x in s.labels)
    if count > cap:
        raise ScenarioError(f"{count} global assignments exceed the cap of {cap}")
    ranges = [range(len(s.outcomes[x])) for x in s.labels]
    for values in itertools.product(*ranges):
        yield dict(zip(s.labels, values))


OrderingPolicy = Union[str, Sequence[Sequence[str]], Callable[[tuple[str, ...]], Sequence[str]]]


def induce_sequential(
    m: MeasurementScenario, ordering: OrderingPolicy = "declared", index_base: int = 0
) -> SequentialScenario:
    """Build the induced sequential scenario: one sequence per context.

    ``ordering`` is ``"declared"``, ``"reversed"``, an explicit list with one
    permutation per context, or a callable mapping a context to its order.
    """
    problems = validate_measurement_scenario(m)
    if problems:
        raise ScenarioError("invalid measurement scenario: " + "; ".join(problems))
    if ordering == "declared":
        orders = [tuple(c) for c in m.contexts]
    elif ordering == "reversed":
        orders = [tuple(reversed(c)) for c in m.contexts]
    elif isinstance(ordering, str):
        raise ScenarioError(f"unknown ordering policy {ordering!r}")
    elif callable(ordering):
        orders = [tuple(ordering(c)) for c in m.contexts]
    else:
        orders = [tuple(o) for o in ordering]
        if len(orders) != len(m.contexts):
            raise ScenarioError(
                f"{len(orders)} orderings given for {len(m.contexts)} contexts"
            )
    for ctx, order in zip(m.contexts, orders):
        if sorted(order) != sorted(ctx):
            raise ScenarioError(f"{list(order)} is not a permutation of context {list(ctx)}")
    return SequentialScenario(m.labels, orders, dict(m.outcomes), index_base=index_base)


def underlying_measurement_scenario(s: SequentialScenario) -> MeasurementScenario | None:
    """The measurement scenario a sequential scenario is induced from.

    ``None`` when some sequence repeats a label. Sequences with the same base
    set give a single context.
    """
    contexts = []
    seen = set()
    for seq in s.sequences:
        if len(set(seq)) != len(seq):
            return None
        key = frozenset(seq)
        if key not in seen:
            seen.add(key)
            contexts.append(tuple(seq))
    return MeasurementScenario(s.labels, contexts, dict(s.outcomes))


# Standard scenarios

KCBS_LABELS = tuple(f"A{i}" for i in range(5))
PM_LABELS = tuple(f"A{i}" for i in range(1, 10))
PM_SEQUENCES = (
    ("A1", "A2", "A3"),
    ("A4", "A5", "A6"),
    ("A7", "A8", "A9"),
    ("A1", "A4", "A7"),
    ("A2", "A5", "A8"),
    ("A3", "A6", "A9"),
)


def kcbs_measurement_scenario() -> MeasurementScenario:
    contexts = [(f"A{i}", f"A{(i + 1) % 5}") for i in range(5)]
    return MeasurementScenario(KCBS_LABELS, contexts, {x: (0, 1) for x in KCBS_LABELS})


def kcbs_scenario() -> SequentialScenario:
    """Five binary instruments, sequences (A^i, A^{i+1 mod 5})."""
    return induce_sequential(kcbs_measurement_scenario(), index_base=1)


def extended_kcbs_scenario() -> SequentialScenario:
    """KCBS with A0 measured again at the end of the first sequence."""
    base = kcbs_scenario()
    sequences = (base.sequences[0] + ("A0",),) + base.sequences[1:]
    return SequentialScenario(base.labels, sequences, dict(base.outcomes), index_base=1)


def peres_mermin_scenario() -> SequentialScenario:
    """Nine +-1 observables; three rows then three columns of the square.

    Outcome index 0 is the +1 eigenvalue, index 1 the -1 eigenvalue.
    """
    return SequentialScenario(
        PM_LABELS, PM_SEQUENCES, {x: (1, -1) for x in PM_LABELS}, index_base=0
    )
