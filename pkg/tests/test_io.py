import json
import warnings
from pathlib import Path

import numpy as np
import pytest
from fuzzing import fuzz_inputs

from seqctx import io
from seqctx.empirical import EmpiricalBehaviour
from seqctx.hvm import epsilon_noisy_family, random_restricted_hvm
from seqctx.quantum import kcbs_realization, pm_realization, realization_behaviour
from seqctx.scenario import (
    MeasurementScenario,
    SequentialScenario,
    extended_kcbs_scenario,
    kcbs_measurement_scenario,
    kcbs_scenario,
    peres_mermin_scenario,
)

GOLDEN = Path(__file__).resolve().parent.parent / "golden"
SCENARIO_GOLDENS = {
    "kcbs_scenario.json": kcbs_scenario,
    "extended_kcbs_scenario.json": extended_kcbs_scenario,
    "pm_scenario.json": peres_mermin_scenario,
}


@pytest.mark.parametrize("name", sorted(SCENARIO_GOLDENS))
def test_golden_scenarios_match_builders(name):
    text = (GOLDEN / name).read_text()
    doc = io.parse(text)
    assert doc.kind == "scenario"
    assert doc.payload == SCENARIO_GOLDENS[name]()
    assert io.serialize(SCENARIO_GOLDENS[name]()) == text


@pytest.mark.parametrize("path", sorted(GOLDEN.glob("*.json")), ids=lambda p: p.name)
def test_every_golden_round_trips(path):
    text = path.read_text()
    assert io.serialize(io.parse(text)) == text


def test_kcbs_document_layout():
    raw = json.loads((GOLDEN / "kcbs_scenario.json").read_text())
    assert raw["kind"] == "scenario" and raw["version"] == 1
    assert raw["payload"]["index_base"] == 1
    assert raw["payload"]["sequences"][4] == ["A4", "A0"]


def test_undeclared_instrument_names_field():
    raw = json.loads(io.serialize(kcbs_scenario()))
    raw["payload"]["sequences"][2][1] = "A7"
    with pytest.raises(io.ParseError) as err:
        io.parse(json.dumps(raw))
    assert err.value.path == "$.payload.sequences[2][1]"
    assert "A7" in err.value.message


def test_wrong_table_length():
    e = realization_behaviour(kcbs_realization(), kcbs_scenario())
    raw = json.loads(io.serialize(e))
    raw["payload"]["tables"][3].append(0.0)
    with pytest.raises(io.ParseError) as err:
        io.parse(json.dumps(raw))
    assert err.value.path == "$.payload.tables[3]"


def test_syntax_error_has_location():
    with pytest.raises(io.ParseError) as err:
        io.parse('{"kind": "scenario",\n "version": 1,, }')
    assert err.value.path.startswith("line 2")


@pytest.mark.parametrize(
    "text, path",
    [
        ("[]", "$"),
        ('{"version": 1, "payload": {}}', "$"),
        ('{"kind": "teapot", "version": 1, "payload": {}}', "$.kind"),
        ('{"kind": "scenario", "version": 2, "payload": {}}', "$.version"),
        ('{"kind": "scenario", "version": true, "payload": {}}', "$.version"),
        ('{"kind": "hvm", "version": 1, "payload": {"mu": [NaN], "responses": {}, "transfers": {}}}', "$"),
        ('{"kind": "hvm", "version": 1, "payload": {"mu": [1e999], "responses": {}, "transfers": {}}}', "$.payload.mu[0]"),
    ],
)
def test_envelope_errors(text, path):
    with pytest.raises(io.ParseError) as err:
        io.parse(text)
    assert err.value.path == path


def test_invalid_utf8():
    with pytest.raises(io.ParseError):
        io.parse(b"\xff\xfe{")


def test_structurally_equal_scenarios_serialize_identically():
    a = SequentialScenario(("A", "B"), [("A", "B")], {"B": (0, 1), "A": (0, 1)})
    b = SequentialScenario(("A", "B"), [["A", "B"]], {"A": [0, 1], "B": [0, 1]})
    assert io.serialize(a) == io.serialize(b)


def test_canonical_form():
    text = io.serialize(kcbs_scenario())
    assert text.endswith("}\n")
    assert io.serialize(io.parse(text)) == text
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"


def test_quantum_realization_bit_exact():
    rng = np.random.default_rng(0)
    G = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = G @ G.conj().T
    rho = rho / np.trace(rho)
    rho = (rho + rho.conj().T) / 2
    r = kcbs_realization(rho)
    back = io.parse(io.serialize(r)).payload
    assert np.array_equal(back.state, r.state)
    for x, inst in r.instruments.items():
        for ops, ops_back in zip(inst.kraus, back.instruments[x].kraus):
            for K, Kb in zip(ops, ops_back):
                assert np.array_equal(K, Kb)


def test_pm_realization_round_trip():
    r = pm_realization()
    assert io.serialize(io.parse(io.serialize(r)).payload) == io.serialize(r)


def test_hvm_round_trip_exact():
    h = random_restricted_hvm(kcbs_scenario(), "ND", seed=11)
    back = io.parse(io.serialize(h)).payload
    assert np.array_equal(back.mu, h.mu)
    for x in h.labels:
        assert np.array_equal(back.responses[x], h.responses[x])
        assert np.array_equal(back.transfers[x], h.transfers[x])


def test_measurement_scenario_round_trip():
    m = kcbs_measurement_scenario()
    assert io.parse(io.serialize(m)).payload == m
    bad = MeasurementScenario(("A", "B"), [("A",)], {"A": (0, 1), "B": (0, 1)})
    with pytest.raises(io.ParseError):
        io.parse(io.serialize(bad))


def test_display_values_preserved():
    s = peres_mermin_scenario()
    back = io.parse(io.serialize(s)).payload
    assert back.outcomes["A5"] == (1, -1)
    assert back.index_base == 0


def test_behaviour_round_trip():
    e = realization_behaviour(kcbs_realization(), extended_kcbs_scenario())
    back = io.parse(io.serialize(e)).payload
    assert isinstance(back, EmpiricalBehaviour)
    assert np.array_equal(back.flat(), e.flat())


def test_report_documents():
    text = io.serialize({"command": "cf", "cf": 0.25})
    assert io.parse(text).payload == {"command": "cf", "cf": 0.25}
    with pytest.raises(io.ParseError):
        io.parse('{"kind": "report", "version": 1, "payload": {"cf": 1}}')


def test_serialize_rejects_unknown_objects():
    with pytest.raises(TypeError):
        io.serialize(object())


def test_invalid_model_content_is_parse_error():
    h = epsilon_noisy_family(0.1)
    raw = json.loads(io.serialize(h))
    raw["payload"]["transfers"]["A"][0][0] = [1.0, 2.0]
    with pytest.raises(io.ParseError) as err:
        io.parse(json.dumps(raw))
    assert err.value.path == "$.payload.transfers.A[0][0]"


def test_small_fuzz_run():
    seeds = [p.read_text() for p in sorted(GOLDEN.glob("*.json"))]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for text in fuzz_inputs(seeds, 3000, seed=99):
            try:
                io.parse(text)
            except io.ParseError as exc:
                assert exc.path
