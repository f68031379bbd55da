"""Independent reference implementations used only by the tests.

Nothing here imports the solver or the incidence builder of the package;
each oracle recomputes its answer from first principles.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def rational_simplex_max(c, A, b):
    """Exact ``max c.x s.t. A x <= b, x >= 0`` for ``b >= 0``.

    Slack-basis tableau over ``Fraction`` with Bland's rule. Inputs are
    converted exactly (a float becomes the dyadic rational it stores).
    Returns ``(objective, x)`` or raises on unboundedness.
    """
    c = [Fraction(v) for v in c]
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    m, n = len(A), len(c)
    if any(v < 0 for v in b):
        raise ValueError("oracle expects b >= 0")
    width = n + m
    rows = []
    for i in range(m):
        row = A[i] + [Fraction(0)] * m
        row[n + i] = Fraction(1)
        rows.append(row + [b[i]])
    z = [-v for v in c] + [Fraction(0)] * m + [Fraction(0)]
    basis = [n + i for i in range(m)]
    while True:
        entering = next((j for j in range(width) if z[j] < 0), None)
        if entering is None:
            break
        best, leave = None, None
        for i in range(m):
            a = rows[i][entering]
            if a > 0:
                ratio = rows[i][width] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            raise ArithmeticError("unbounded")
        prow = rows[leave]
        piv = prow[entering]
        prow[:] = [v / piv for v in prow]
        support = [j for j, v in enumerate(prow) if v != 0]
        for other in itertools.chain(rows, [z]):
            if other is prow:
                continue
            f = other[entering]
            if f != 0:
                for j in support:
                    other[j] -= f * prow[j]
        basis[leave] = entering
    x = [Fraction(0)] * width
    for i, j in enumerate(basis):
        x[j] = rows[i][width]
    return z[width], x[:n]


def brute_incidence(labels, outcome_counts, sequences):
    """Rows: (sequence, joint outcome) in row-major order; columns: global
    assignments with the last label varying fastest."""
    assignments = list(itertools.product(*(range(outcome_counts[x]) for x in labels)))
    rows = []
    for seq in sequences:
        for o in itertools.product(*(range(outcome_counts[x]) for x in seq)):
            rows.append([
                int(all(o[k] == g[labels.index(x)] for k, x in enumerate(seq))) for g in assignments
            ])
    return np.array(rows, dtype=float)


def brute_sequence_probability(mu, responses, transfers, seq, outcome):
    """Sum over every hidden-variable path, one explicit loop level per step."""

    def walk(pos, lam):
        x = seq[pos]
        p = responses[x][lam][outcome[pos]]
        if p == 0.0:
            return 0.0
        if pos == len(seq) - 1:
            return p
        total = 0.0
        for nxt in range(len(mu)):
            g = transfers[x][lam][outcome[pos]][nxt]
            if g != 0.0:
                total += g * walk(pos + 1, nxt)
        return p * total

    return sum(mu[lam] * walk(0, lam) for lam in range(len(mu)) if mu[lam] != 0.0)


def brute_sequence_table(mu, responses, transfers, seq, counts):
    return np.array([
        brute_sequence_probability(mu, responses, transfers, seq, o)
        for o in itertools.product(*(range(counts[x]) for x in seq))
    ])


def od_transfer_violation(h, a_label, b_label, support_tol=1e-12):
    """Largest gap between ``B``'s response at a state and at any state the
    deterministic ``A`` can move it to. Loops written out explicitly."""
    xi_a, gamma = h.responses[a_label], h.transfers[a_label]
    xi_b = h.responses[b_label]
    worst = 0.0
    for lam in range(h.lambda_count):
        a_lam = int(np.argmax(xi_a[lam]))
        assert xi_a[lam][a_lam] == 1.0
        for nxt in range(h.lambda_count):
            if gamma[lam][a_lam][nxt] > support_tol:
                for b in range(xi_b.shape[1]):
                    worst = max(worst, abs(xi_b[nxt][b] - xi_b[lam][b]))
    return worst


def oi_transfer_violation(h, a_label, b_label):
    """Largest gap in ``sum_l' G(l'|l) xi_B(b|l') = xi_B(b|l)`` for an
    outcome-independent ``A`` (the transfer of outcome 0 stands for all)."""
    gamma = h.transfers[a_label]
    xi_b = h.responses[b_label]
    worst = 0.0
    for lam in range(h.lambda_count):
        for b in range(xi_b.shape[1]):
            total = 0.0
            for nxt in range(h.lambda_count):
                total += gamma[lam][0][nxt] * xi_b[nxt][b]
            worst = max(worst, abs(total - xi_b[lam][b]))
    return worst


def ordered_pairs(s):
    """Distinct (earlier, later) label pairs occurring in some sequence."""
    pairs = []
    for seq in s.sequences:
        for i, j in itertools.combinations(range(len(seq)), 2):
            if (seq[i], seq[j]) not in pairs:
                pairs.append((seq[i], seq[j]))
    return pairs
