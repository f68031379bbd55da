from fractions import Fraction

import numpy as np
import pytest
from oracles import brute_incidence, rational_simplex_max

from seqctx.lp import LinearProgram, LpStatus, duality_gap, solve
from seqctx.quantum import kcbs_realization, realization_behaviour
from seqctx.scenario import kcbs_scenario


def test_single_variable():
    sol = solve(LinearProgram([1.0], [[1.0]], [1.0]))
    assert sol.status == LpStatus.OPTIMAL
    assert sol.x[0] == pytest.approx(1.0)


def test_two_variables():
    sol = solve(LinearProgram([1.0, 1.0], [[1.0, 1.0]], [1.0]))
    assert sol.status == LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(1.0)


def test_unbounded():
    assert solve(LinearProgram([1.0, 0.0], [[-1.0, 1.0]], [1.0])).status == LpStatus.UNBOUNDED


def test_infeasible():
    # x <= -1 with x >= 0
    assert solve(LinearProgram([1.0], [[1.0]], [-1.0])).status == LpStatus.INFEASIBLE


def test_negative_rhs_feasible():
    # max -x subject to -x <= -2 (x >= 2)
    sol = solve(LinearProgram([-1.0], [[-1.0]], [-2.0]))
    assert sol.status == LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(-2.0)


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 1.0], [[1.0]], [1.0])
    with pytest.raises(ValueError):
        LinearProgram([np.nan], [[1.0]], [1.0])


def test_rational_oracle_small_example():
    obj, x = rational_simplex_max([3, 2], [[1, 1], [1, 3], [2, 1]], [4, 6, 6])
    # vertex where 2x + y = 6 meets x + 3y = 6
    assert obj == Fraction(48, 5) and x == [Fraction(12, 5), Fraction(6, 5)]


def test_kcbs_ncf_program_matches_rational_oracle():
    s = kcbs_scenario()
    e = realization_behaviour(kcbs_realization(), s)
    M = brute_incidence(list(s.labels), {x: 2 for x in s.labels}, s.sequences)
    exact, _ = rational_simplex_max(np.ones(M.shape[1]), M, e.flat())
    sol = solve(LinearProgram(np.ones(M.shape[1]), M, e.flat()))
    assert sol.status == LpStatus.OPTIMAL
    assert abs(sol.objective - float(exact)) <= 1e-8


def _random_feasible(rng, m, n):
    A = rng.normal(size=(m, n))
    interior = rng.uniform(0.1, 1.0, n)
    b = A @ interior + rng.uniform(0.1, 1.0, m)
    # a positive row keeps the program bounded
    A = np.vstack([A, np.ones(n)])
    b = np.append(b, interior.sum() + 1.0)
    return LinearProgram(rng.normal(size=n), A, b)


@pytest.mark.parametrize("seed", range(40))
def test_random_feasible_programs_are_certified(seed):
    rng = np.random.default_rng(seed)
    p = _random_feasible(rng, int(rng.integers(2, 12)), int(rng.integers(2, 15)))
    sol = solve(p)
    assert sol.status == LpStatus.OPTIMAL
    assert duality_gap(p, sol) <= 1e-8
    assert np.all(sol.x >= -1e-9)
    assert np.all(p.A @ sol.x <= p.b + 1e-8)


@pytest.mark.parametrize("seed", range(20))
def test_random_nonnegative_programs_match_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    m, n = int(rng.integers(2, 8)), int(rng.integers(2, 10))
    A = rng.integers(0, 4, size=(m, n)).astype(float)
    A[:, A.sum(axis=0) == 0] = 1.0
    b = rng.integers(0, 5, size=m).astype(float)
    c = rng.integers(-2, 5, size=n).astype(float)
    exact, _ = rational_simplex_max(c, A, b)
    sol = solve(LinearProgram(c, A, b))
    assert sol.status == LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(float(exact), abs=1e-9)


def test_degenerate_program_terminates():
    # many redundant constraints through the same vertex
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [1.0, 2.0]])
    b = np.array([1.0, 1.0, 2.0, 3.0, 3.0])
    sol = solve(LinearProgram([1.0, 1.0], A, b))
    assert sol.status == LpStatus.OPTIMAL and sol.objective == pytest.approx(2.0)
