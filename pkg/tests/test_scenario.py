import itertools

import pytest

from seqctx.scenario import (
    MeasurementScenario,
    ScenarioError,
    SequentialScenario,
    base_set,
    consistent_projection,
    enumerate_global_assignments,
    extended_kcbs_scenario,
    induce_sequential,
    kcbs_measurement_scenario,
    kcbs_scenario,
    peres_mermin_scenario,
    underlying_measurement_scenario,
    validate_scenario,
)

BIN = (0, 1)


def test_kcbs_scenario_is_valid():
    s = kcbs_scenario()
    assert validate_scenario(s) == []
    assert s.sequences == (("A0", "A1"), ("A1", "A2"), ("A2", "A3"), ("A3", "A4"), ("A4", "A0"))


def test_undeclared_label_gives_one_violation():
    s = SequentialScenario(("A", "B"), [("A", "C")], {"A": BIN, "B": BIN})
    problems = validate_scenario(s)
    assert len(problems) == 1
    assert "C" in problems[0]


def test_empty_sequence_list_is_valid():
    assert validate_scenario(SequentialScenario(("A",), [], {"A": BIN})) == []


@pytest.mark.parametrize(
    "seq, expected",
    [
        (("A", "B", "A", "C", "B"), {"A", "B", "C"}),
        (("A",), {"A"}),
        (("A", "A", "A"), {"A"}),
    ],
)
def test_base_set(seq, expected):
    assert base_set(seq) == frozenset(expected)


def test_consistent_projection_examples():
    assert consistent_projection((0, 1, 0), ("A", "B", "A")) == {"A": 0, "B": 1}
    assert consistent_projection((0, 1, 1), ("A", "B", "A")) is None
    assert consistent_projection((1, 0, 1), ("A", "B", "C")) == {"A": 1, "B": 0, "C": 1}


def test_consistent_projection_length_mismatch():
    with pytest.raises(ScenarioError):
        consistent_projection((0, 1), ("A",))


def test_consistent_projection_exhaustive():
    seq = ("A", "B", "A", "C", "B")
    for o in itertools.product(range(3), repeat=len(seq)):
        agree = o[0] == o[2] and o[1] == o[4]
        assert (consistent_projection(o, seq) is not None) == agree


@pytest.mark.parametrize(
    "s, count",
    [
        (kcbs_scenario(), 32),
        (peres_mermin_scenario(), 512),
        (SequentialScenario(("A",), [("A",)], {"A": (0,)}), 1),
    ],
)
def test_global_assignment_count(s, count):
    assignments = list(enumerate_global_assignments(s))
    assert len(assignments) == count == s.assignment_count()
    assert len({tuple(sorted(g.items())) for g in assignments}) == count


def test_assignment_cap():
    with pytest.raises(ScenarioError):
        list(enumerate_global_assignments(peres_mermin_scenario(), cap=100))


def test_mixed_alphabets_exhaustive():
    s = SequentialScenario(("A", "B", "C"), [("A", "B")], {"A": (0, 1, 2), "B": (0,), "C": ("x", "y")})
    got = {tuple(g[x] for x in s.labels) for g in enumerate_global_assignments(s)}
    assert got == set(itertools.product(range(3), range(1), range(2)))


def test_induce_kcbs_identity_order():
    s = induce_sequential(kcbs_measurement_scenario(), index_base=1)
    assert s == kcbs_scenario()


def test_induce_reversed_is_valid():
    s = induce_sequential(kcbs_measurement_scenario(), ordering="reversed")
    assert validate_scenario(s) == []
    assert s.sequences[0] == ("A1", "A0")


def test_induce_singleton_contexts():
    m = MeasurementScenario(("A", "B"), [("A",), ("B",)], {"A": BIN, "B": BIN})
    s = induce_sequential(m)
    assert all(len(seq) == 1 for seq in s.sequences)


def test_induce_rejects_bad_permutation():
    with pytest.raises(ScenarioError):
        induce_sequential(kcbs_measurement_scenario(), ordering=[("A0", "A2")] * 5)


def test_underlying_measurement_scenario():
    assert underlying_measurement_scenario(kcbs_scenario()) == kcbs_measurement_scenario()
    assert underlying_measurement_scenario(extended_kcbs_scenario()) is None
    empty = underlying_measurement_scenario(SequentialScenario(("A",), [], {"A": BIN}))
    assert empty is not None and empty.contexts == ()


@pytest.mark.parametrize("ordering", ["declared", "reversed"])
def test_induce_then_underlying_roundtrip(ordering):
    m = MeasurementScenario(
        ("A", "B", "C", "D"),
        [("A", "B", "C"), ("C", "D"), ("D", "A")],
        {"A": BIN, "B": (0, 1, 2), "C": BIN, "D": BIN},
    )
    assert underlying_measurement_scenario(induce_sequential(m, ordering)) == m


def test_pm_scenario_shape():
    s = peres_mermin_scenario()
    assert len(s.sequences) == 6
    assert all(len(seq) == 3 for seq in s.sequences)
    assert s.outcomes["A1"] == (1, -1)
