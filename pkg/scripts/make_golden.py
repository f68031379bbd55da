"""Regenerate the golden documents under ``golden/``."""

import os
import sys

from seqctx import cli, hvm, io, scenario

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "golden")


def main():
    out = os.path.abspath(ROOT)
    for name in ("kcbs", "pm"):
        cli.run(["demo", name, "--emit", out], out=open(os.devnull, "w"))
    io.dump(scenario.kcbs_measurement_scenario(), os.path.join(out, "kcbs_measurement_scenario.json"))

    ab = scenario.SequentialScenario(
        ("A", "B"), [("A", "B"), ("B", "A"), ("B", "A", "B")], {"A": (0, 1), "B": (0, 1)}
    )
    io.dump(ab, os.path.join(out, "ab_scenario.json"))
    io.dump(hvm.epsilon_noisy_family(0.1), os.path.join(out, "ab_noisy_hvm.json"))

    s = scenario.kcbs_scenario()
    for restriction, tag in (("OD+ND", "od_nd"), ("OI+ND", "oi_nd"), ("ND", "nd")):
        h = hvm.random_restricted_hvm(s, restriction, seed=3, n_lambda=6)
        io.dump(h, os.path.join(out, f"kcbs_{tag}_hvm.json"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
