"""Command-line interface.

Exit codes: 0 success, 1 domain-level failure (for example a contextual
behaviour under ``--assert-nc``), 2 input error.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
import time

from . import empirical, hvm, io, lp, polytope, quantum, scenario

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _load_document(path) -> io.Document:
    try:
        return io.load(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except io.ParseError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load(path, *kinds):
    doc = _load_document(path)
    if kinds and doc.kind not in kinds:
        raise InputError(f"{path}: expected a {' or '.join(kinds)} document, got {doc.kind}")
    return doc.payload


def _tolerances(**extra):
    tols = {
        "lp_pivot": lp.PIVOT_TOL,
        "lp_feasibility": lp.FEAS_TOL,
        "lp_gap": lp.GAP_TOL,
    }
    tols.update(extra)
    return tols


def _header(out, command, tols):
    out.write(f"# seqctx {command}\n")
    out.write("# tolerances: " + ", ".join(f"{k}={v:g}" for k, v in tols.items()) + "\n")


def _emit(out, report, as_json, lines):
    if as_json:
        out.write(io.serialize(report))
    else:
        _header(out, report["command"], report["tolerances"])
        for line in lines:
            out.write(line + "\n")


def _fmt(x):
    return f"{x:.12g}"


# subcommands


def cmd_validate(args, out):
    doc = _load_document(args.file)
    problems = []
    obj = doc.payload
    if doc.kind == "behaviour":
        problems = empirical.validate_behaviour(obj, tol=args.tol)
    elif doc.kind == "hvm":
        problems = hvm.validate_hvm(obj, tol=args.tol)
    out.write(f"{args.file}: {doc.kind} document, version {doc.version}\n")
    if doc.kind in ("scenario", "behaviour"):
        s = obj if doc.kind == "scenario" else obj.scenario
        out.write(f"  instruments: {len(s.labels)}, sequences: {len(s.sequences)}\n")
    for p in problems:
        out.write(f"  problem: {p}\n")
    out.write("valid\n" if not problems else "invalid\n")
    return EXIT_OK if not problems else EXIT_DOMAIN


def cmd_cf(args, out):
    e = _load(args.behaviour, "behaviour")
    if args.scenario is not None:
        s = _load(args.scenario, "scenario")
        if s != e.scenario:
            raise InputError("behaviour document was built on a different scenario")
    problems = empirical.validate_behaviour(e, tol=args.tol)
    if problems:
        raise InputError("invalid behaviour: " + "; ".join(problems))
    compat = empirical.check_compatibility_of_marginals(e, tol=args.tol)
    res = polytope.contextual_fraction(e)
    if not res.optimal:
        out.write(f"LP failed: {res.status.value}\n")
        return EXIT_DOMAIN
    report = {
        "command": "cf",
        "tolerances": _tolerances(tol=args.tol),
        "ncf": res.ncf,
        "cf": res.cf,
        "noncontextual": res.cf <= args.tol,
        "compatible_marginals": compat.passed,
        "max_marginal_deviation": compat.max_deviation,
    }
    _emit(out, report, args.json, [
        f"NCF = {_fmt(res.ncf)}",
        f"CF  = {_fmt(res.cf)}",
        f"compatibility of marginals: {'yes' if compat.passed else 'no'}"
        f" (max deviation {compat.max_deviation:.3g})",
        "non-contextual" if report["noncontextual"] else "contextual",
    ])
    if args.assert_nc and not report["noncontextual"]:
        return EXIT_DOMAIN
    return EXIT_OK


def _quantum_pairs(s):
    seen = []
    for seq in s.sequences:
        for i, j in itertools.combinations(range(len(seq)), 2):
            if (seq[i], seq[j]) not in seen:
                seen.append((seq[i], seq[j]))
    return seen


def cmd_nd_check(args, out):
    s = _load(args.scenario, "scenario")
    if args.hvm is not None:
        h = _load(args.hvm, "hvm")
        try:
            problems = hvm.validate_hvm(h, s)
        except hvm.HVMShapeError as exc:
            raise InputError(str(exc)) from None
        if problems:
            raise InputError("invalid model: " + "; ".join(problems))
        rep = hvm.check_nd_hvm(h, s, tol=args.tol)
        lines = [f"sequence {k} positions ({i}, {j}): deviation {dev:.3g}" for k, i, j, dev in rep.failures]
        passed, worst = rep.passed, rep.max_deviation
        extra = {
            "outcome_deterministic": hvm.is_outcome_deterministic_hvm(h, s),
            "outcome_independent": hvm.is_outcome_independent_hvm(h, s),
        }
        lines += [f"outcome-deterministic: {extra['outcome_deterministic']}",
                  f"outcome-independent: {extra['outcome_independent']}"]
    else:
        r = _load(args.quantum, "quantum_realization")
        missing = [x for x in s.labels if x not in r.instruments]
        if missing:
            raise InputError(f"realization lacks instruments {missing}")
        worst, lines, passed, extra = 0.0, [], True, {}
        for a, b in _quantum_pairs(s):
            chk = quantum.check_quantum_nd(r, a, b, tol=args.tol)
            worst = max(worst, chk.max_deviation)
            passed &= chk.passed
            lines.append(f"{a} -> {b}: {'ok' if chk.passed else 'DISTURBS'} ({chk.max_deviation:.3g})")
    report = {"command": "nd-check", "tolerances": _tolerances(tol=args.tol),
              "passed": bool(passed), "max_deviation": worst, **extra}
    _emit(out, report, args.json, lines + [
        f"no-disturbance: {'passed' if passed else 'FAILED'} (max deviation {worst:.3g})"
    ])
    return EXIT_OK if passed else EXIT_DOMAIN


def cmd_simulate(args, out):
    s = _load(args.scenario, "scenario")
    h = _load(args.hvm, "hvm")
    try:
        problems = hvm.validate_hvm(h, s)
        if problems:
            raise InputError("invalid model: " + "; ".join(problems))
        e = hvm.behaviour(h, s)
    except hvm.HVMShapeError as exc:
        raise InputError(str(exc)) from None
    text = io.serialize(e)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_induce(args, out):
    m = _load(args.measurement_scenario, "measurement_scenario")
    s = scenario.induce_sequential(m, ordering=args.order, index_base=args.index_base)
    out.write(io.serialize(s))
    return EXIT_OK


def _demo_kcbs():
    s = scenario.kcbs_scenario()
    r = quantum.kcbs_realization()
    e = quantum.realization_behaviour(r, s)
    return {
        "name": "kcbs",
        "scenario": s,
        "realization": r,
        "behaviour": e,
        "value": quantum.kcbs_expression(e),
        "exact": 5 - 2 * math.sqrt(5),
        "bound": quantum.KCBS_BOUND,
        "classical": polytope.classical_optimum(s, quantum.kcbs_expression, sense="min"),
    }


def _demo_pm():
    s = scenario.peres_mermin_scenario()
    r = quantum.pm_realization()
    e = quantum.realization_behaviour(r, s)
    mixed = quantum.pm_value(r.with_state(quantum.maximally_mixed(4)), s)
    return {
        "name": "pm",
        "scenario": s,
        "realization": r,
        "behaviour": e,
        "value": quantum.pm_expression(e),
        "value_mixed": mixed,
        "exact": 6.0,
        "bound": quantum.PM_BOUND,
        "classical": polytope.classical_optimum(s, quantum.pm_expression),
    }


def cmd_demo(args, out):
    start = time.perf_counter()
    d = _demo_kcbs() if args.name == "kcbs" else _demo_pm()
    s, r, e = d["scenario"], d["realization"], d["behaviour"]
    nd = [(a, b, quantum.check_quantum_nd(r, a, b)) for a, b in _quantum_pairs(s)]
    nd_pass = all(c.passed for _, _, c in nd)
    nd_worst = max(c.max_deviation for _, _, c in nd)
    res = polytope.contextual_fraction(e)
    elapsed = time.perf_counter() - start
    violated = d["value"] > d["bound"] if d["name"] == "pm" else d["value"] < d["bound"]
    report = {
        "command": f"demo {d['name']}",
        "tolerances": _tolerances(nd=quantum.ND_TOL),
        "value": d["value"],
        "expected": d["exact"],
        "bound": d["bound"],
        "classical_optimum": d["classical"],
        "violated": bool(violated),
        "nd_passed": bool(nd_pass),
        "nd_max_deviation": nd_worst,
        "cf": res.cf,
        "seconds": elapsed,
    }
    if "value_mixed" in d:
        report["value_maximally_mixed"] = d["value_mixed"]
    relation = ">=" if d["name"] == "kcbs" else "<="
    lines = [
        f"value      = {_fmt(d['value'])}   (expected {_fmt(d['exact'])})",
    ]
    if "value_mixed" in d:
        lines.append(f"value (maximally mixed input) = {_fmt(d['value_mixed'])}")
    lines += [
        f"bound      = {_fmt(d['bound'])}   (non-contextual models satisfy value {relation} bound;"
        f" optimum over assignments {_fmt(d['classical'])})",
        "VIOLATED" if violated else "not violated",
        f"no-disturbance on {len(nd)} ordered pairs: {'all pass' if nd_pass else 'FAILURES'}"
        f" (max deviation {nd_worst:.3g})",
        f"CF         = {_fmt(res.cf)}",
        f"time       = {elapsed:.3f} s",
    ]
    if args.emit:
        os.makedirs(args.emit, exist_ok=True)
        files = {
            f"{d['name']}_scenario.json": s,
            f"{d['name']}_realization.json": r,
            f"{d['name']}_behaviour.json": e,
        }
        if d["name"] == "kcbs":
            files["extended_kcbs_scenario.json"] = scenario.extended_kcbs_scenario()
        for name, obj in files.items():
            io.dump(obj, os.path.join(args.emit, name))
            lines.append(f"wrote {os.path.join(args.emit, name)}")
    _emit(out, report, args.json, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqctx", description="Contextuality in sequential measurement scenarios.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="parse and validate a document")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=empirical.DEFAULT_TOL)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("cf", help="contextual fraction of a behaviour")
    p.add_argument("behaviour")
    p.add_argument("--scenario", help="check the behaviour was built on this scenario")
    p.add_argument("--tol", type=float, default=polytope.NC_TOL)
    p.add_argument("--assert-nc", action="store_true", help="exit 1 if the behaviour is contextual")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("nd-check", help="no-disturbance check of a model or realization")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--hvm")
    src.add_argument("--quantum")
    p.add_argument("--scenario", required=True)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_nd_check)

    p = sub.add_parser("simulate", help="behaviour of a hidden-variable model")
    p.add_argument("--hvm", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("induce", help="sequential scenario induced by a measurement scenario")
    p.add_argument("measurement_scenario")
    p.add_argument("--order", choices=("declared", "reversed"), default="declared")
    p.add_argument("--index-base", type=int, default=0)
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("demo", help="reproduce a standard quantum violation")
    p.add_argument("name", choices=("kcbs", "pm"))
    p.add_argument("--emit", metavar="DIR", help="write scenario, realization and behaviour files")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_demo)
    return parser


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    if args.command == "nd-check" and args.tol is None:
        args.tol = hvm.DEFAULT_TOL if args.hvm is not None else quantum.ND_TOL
    try:
        return args.func(args, out)
    except (InputError, io.ParseError, scenario.ScenarioError) as exc:
        sys.stderr.write(f"seqctx: error: {exc}\n")
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
