"""JSON documents for scenarios, behaviours, models and quantum realizations.

Every document is an envelope ``{"kind": ..., "version": 1, "payload": ...}``.
Serialization is canonical: sorted keys, two-space indent, shortest
round-trip float rendering, trailing newline. Complex numbers are
``[re, im]`` pairs; behaviour tables are flat arrays in row-major outcome
order (position 0 most significant).

Payloads
--------
scenario
    ``{"labels": [str], "outcomes": {label: [int|str]},
    "sequences": [[label]], "index_base": int}``
measurement_scenario
    ``{"labels": [str], "outcomes": {label: [int|str]}, "contexts": [[label]]}``
behaviour
    ``{"scenario": <scenario payload>, "tables": [[float]]}``
hvm
    ``{"mu": [float], "responses": {label: [[float]]},
    "transfers": {label: [[[float]]]}}`` with transfers indexed
    ``[lambda][outcome][lambda']``
quantum_realization
    ``{"state": matrix, "instruments": {label: [[matrix]]}}`` where the
    instrument entry lists, per outcome, its Kraus operators and a matrix
    is a list of rows of ``[re, im]`` pairs
report
    free-form object with a ``"command"`` string, written by the CLI
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .empirical import EmpiricalBehaviour
from .hvm import MAX_LAMBDA, HiddenVariableModel
from .quantum import MAX_DIM, QuantumInstrument, QuantumRealization
from .scenario import (
    MeasurementScenario,
    SequentialScenario,
    validate_measurement_scenario,
    validate_scenario,
)

VERSION = 1
KINDS = ("scenario", "measurement_scenario", "behaviour", "hvm", "quantum_realization", "report")


class ParseError(ValueError):
    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.message = message
        self.path = path


@dataclass(eq=False)
class Document:
    kind: str
    version: int
    payload: Any  # the domain object, or a dict for reports


# reading helpers


def _field(obj, key, path):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", path)
    if key not in obj:
        raise ParseError(f"missing field {key!r}", path)
    return obj[key]


def _list(obj, path, min_len=0):
    if not isinstance(obj, list):
        raise ParseError("expected an array", path)
    if len(obj) < min_len:
        raise ParseError(f"expected at least {min_len} entries", path)
    return obj


def _dict(obj, path):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", path)
    return obj


def _str(obj, path):
    if not isinstance(obj, str) or not obj:
        raise ParseError("expected a non-empty string", path)
    return obj


def _int(obj, path):
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ParseError("expected an integer", path)
    return obj


def _number(obj, path):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ParseError("expected a number", path)
    value = float(obj)
    if not math.isfinite(value):
        raise ParseError("expected a finite number", path)
    return value


def _numbers(obj, path, length=None):
    items = _list(obj, path)
    if length is not None and len(items) != length:
        raise ParseError(f"expected {length} entries, got {len(items)}", path)
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(items)]


def _complex_matrix(obj, path, dim=None):
    rows = _list(obj, path, min_len=1)
    d = len(rows) if dim is None else dim
    if d > MAX_DIM:
        raise ParseError(f"dimension {d} exceeds {MAX_DIM}", path)
    if len(rows) != d:
        raise ParseError(f"expected {d} rows, got {len(rows)}", path)
    out = np.zeros((d, d), dtype=complex)
    for i, row in enumerate(rows):
        row = _list(row, f"{path}[{i}]")
        if len(row) != d:
            raise ParseError(f"expected {d} entries, got {len(row)}", f"{path}[{i}]")
        for j, z in enumerate(row):
            re, im = _numbers(z, f"{path}[{i}][{j}]", length=2)
            out[i, j] = complex(re, im)
    return out


def _labels_and_outcomes(p, path):
    labels = [_str(x, f"{path}.labels[{i}]") for i, x in enumerate(_list(_field(p, "labels", path), f"{path}.labels"))]
    if len(set(labels)) != len(labels):
        raise ParseError("duplicate instrument label", f"{path}.labels")
    raw = _dict(_field(p, "outcomes", path), f"{path}.outcomes")
    outcomes = {}
    for x, alphabet in raw.items():
        apath = f"{path}.outcomes.{x}"
        if x not in labels:
            raise ParseError(f"outcome set for undeclared instrument {x!r}", apath)
        values = _list(alphabet, apath, min_len=1)
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, str)):
                raise ParseError("outcome names must be integers or strings", f"{apath}[{i}]")
        if len(set(map(repr, values))) != len(values):
            raise ParseError("repeated outcome name", apath)
        outcomes[x] = tuple(values)
    for x in labels:
        if x not in outcomes:
            raise ParseError(f"instrument {x!r} has no outcome set", f"{path}.outcomes")
    return labels, outcomes


def _label_lists(p, key, path, labels):
    lists = _list(_field(p, key, path), f"{path}.{key}")
    out = []
    for i, seq in enumerate(lists):
        spath = f"{path}.{key}[{i}]"
        seq = _list(seq, spath, min_len=1)
        for j, x in enumerate(seq):
            _str(x, f"{spath}[{j}]")
            if x not in labels:
                raise ParseError(f"undeclared instrument {x!r}", f"{spath}[{j}]")
        out.append(tuple(seq))
    return out


def _scenario(p, path) -> SequentialScenario:
    _dict(p, path)
    labels, outcomes = _labels_and_outcomes(p, path)
    sequences = _label_lists(p, "sequences", path, labels)
    base = _int(p.get("index_base", 0), f"{path}.index_base")
    s = SequentialScenario(labels, sequences, outcomes, index_base=base)
    problems = validate_scenario(s)
    if problems:
        raise ParseError("; ".join(problems), path)
    return s


def _measurement_scenario(p, path) -> MeasurementScenario:
    _dict(p, path)
    labels, outcomes = _labels_and_outcomes(p, path)
    contexts = _label_lists(p, "contexts", path, labels)
    m = MeasurementScenario(labels, contexts, outcomes)
    problems = validate_measurement_scenario(m)
    if problems:
        raise ParseError("; ".join(problems), f"{path}.contexts")
    return m


def _behaviour(p, path) -> EmpiricalBehaviour:
    _dict(p, path)
    s = _scenario(_field(p, "scenario", path), f"{path}.scenario")
    tables = _list(_field(p, "tables", path), f"{path}.tables")
    if len(tables) != len(s.sequences):
        raise ParseError(f"expected {len(s.sequences)} tables, got {len(tables)}", f"{path}.tables")
    parsed = [
        _numbers(t, f"{path}.tables[{i}]", length=s.table_size(i)) for i, t in enumerate(tables)
    ]
    return EmpiricalBehaviour(s, tuple(np.array(t) for t in parsed))


def _hvm(p, path) -> HiddenVariableModel:
    _dict(p, path)
    mu = _numbers(_field(p, "mu", path), f"{path}.mu")
    n = len(mu)
    if not 1 <= n <= MAX_LAMBDA:
        raise ParseError(f"hidden variable space must have 1..{MAX_LAMBDA} states", f"{path}.mu")
    responses = _dict(_field(p, "responses", path), f"{path}.responses")
    transfers = _dict(_field(p, "transfers", path), f"{path}.transfers")
    if set(responses) != set(transfers):
        raise ParseError("responses and transfers must cover the same instruments", path)
    xis, gammas = {}, {}
    for x in responses:
        rpath = f"{path}.responses.{x}"
        rows = _list(responses[x], rpath)
        if len(rows) != n:
            raise ParseError(f"expected {n} rows, got {len(rows)}", rpath)
        first = _list(rows[0], f"{rpath}[0]", min_len=1)
        k = len(first)
        xi = np.array([_numbers(r, f"{rpath}[{i}]", length=k) for i, r in enumerate(rows)])
        tpath = f"{path}.transfers.{x}"
        slabs = _list(transfers[x], tpath)
        if len(slabs) != n:
            raise ParseError(f"expected {n} entries, got {len(slabs)}", tpath)
        gamma = np.zeros((n, k, n))
        for i, slab in enumerate(slabs):
            slab = _list(slab, f"{tpath}[{i}]")
            if len(slab) != k:
                raise ParseError(f"expected {k} entries, got {len(slab)}", f"{tpath}[{i}]")
            for a, row in enumerate(slab):
                gamma[i, a] = _numbers(row, f"{tpath}[{i}][{a}]", length=n)
        xis[x], gammas[x] = xi, gamma
    return HiddenVariableModel(np.array(mu), xis, gammas)


def _realization(p, path) -> QuantumRealization:
    _dict(p, path)
    state = _complex_matrix(_field(p, "state", path), f"{path}.state")
    d = state.shape[0]
    raw = _dict(_field(p, "instruments", path), f"{path}.instruments")
    insts = {}
    for x, outcomes in raw.items():
        ipath = f"{path}.instruments.{x}"
        kraus = []
        for a, ops in enumerate(_list(outcomes, ipath, min_len=1)):
            opath = f"{ipath}[{a}]"
            kraus.append(
                tuple(_complex_matrix(K, f"{opath}[{k}]", dim=d) for k, K in enumerate(_list(ops, opath, min_len=1)))
            )
        try:
            insts[x] = QuantumInstrument(tuple(kraus))
        except ValueError as exc:
            raise ParseError(str(exc), ipath) from None
    return QuantumRealization(state, insts)


def _report(p, path):
    _dict(p, path)
    _str(_field(p, "command", path), f"{path}.command")
    return p


_READERS = {
    "scenario": _scenario,
    "measurement_scenario": _measurement_scenario,
    "behaviour": _behaviour,
    "hvm": _hvm,
    "quantum_realization": _realization,
    "report": _report,
}


def _reject_constant(name):
    raise ValueError(f"non-finite number {name}")


def parse(text: str | bytes) -> Document:
    """Parse and validate a document; every failure is a ``ParseError``."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8: {exc.reason}") from None
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    except (ValueError, RecursionError) as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    env = _dict(raw, "$")
    kind = _field(env, "kind", "$")
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r}", "$.kind")
    version = _field(env, "version", "$")
    if isinstance(version, bool) or version != VERSION:
        raise ParseError(f"unsupported version {version!r}", "$.version")
    payload = _field(env, "payload", "$")
    try:
        obj = _READERS[kind](payload, "$.payload")
    except ParseError:
        raise
    except (ValueError, TypeError, OverflowError, RecursionError) as exc:
        raise ParseError(str(exc), "$.payload") from None
    return Document(kind, VERSION, obj)


def load(path) -> Document:
    with open(path, "rb") as f:
        return parse(f.read())


# writing


def _cmatrix(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def _scenario_payload(s: SequentialScenario) -> dict:
    return {
        "labels": list(s.labels),
        "outcomes": {x: list(s.outcomes[x]) for x in s.labels},
        "sequences": [list(seq) for seq in s.sequences],
        "index_base": s.index_base,
    }


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def _payload(obj) -> tuple[str, Any]:
    if isinstance(obj, SequentialScenario):
        return "scenario", _scenario_payload(obj)
    if isinstance(obj, MeasurementScenario):
        return "measurement_scenario", {
            "labels": list(obj.labels),
            "outcomes": {x: list(obj.outcomes[x]) for x in obj.labels},
            "contexts": [list(c) for c in obj.contexts],
        }
    if isinstance(obj, EmpiricalBehaviour):
        return "behaviour", {
            "scenario": _scenario_payload(obj.scenario),
            "tables": [_floats(t) for t in obj.tables],
        }
    if isinstance(obj, HiddenVariableModel):
        return "hvm", {
            "mu": _floats(obj.mu),
            "responses": {x: [_floats(r) for r in obj.responses[x]] for x in obj.labels},
            "transfers": {
                x: [[_floats(row) for row in slab] for slab in obj.transfers[x]] for x in obj.labels
            },
        }
    if isinstance(obj, QuantumRealization):
        return "quantum_realization", {
            "state": _cmatrix(obj.state),
            "instruments": {
                x: [[_cmatrix(K) for K in ops] for ops in inst.kraus]
                for x, inst in obj.instruments.items()
            },
        }
    if isinstance(obj, dict) and "command" in obj:
        return "report", obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def serialize(obj) -> str:
    """Canonical text of a domain object, a report dict, or a ``Document``."""
    if isinstance(obj, Document):
        obj = obj.payload
    kind, payload = _payload(obj)
    env = {"kind": kind, "version": VERSION, "payload": payload}
    return json.dumps(env, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def dump(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize(obj))
