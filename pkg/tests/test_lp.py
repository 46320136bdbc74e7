import itertools
import random

import numpy as np
import pytest

from stencilplan.lp import LpError, LpProblem, fix_variable, residuals, solve_lp
from stencilplan.solver1d import build_simplified_lp, update_profits
from stencilplan.model import evaluate

from conftest import random_instance_1d


def knapsack_lp():
    p = LpProblem(c=[1.0, 1.0], bounds=[(0.0, 1.0), (0.0, 1.0)])
    p.add_row([(0, 1.0), (1, 1.0)], 1.0)
    return p


class TestSolve:
    def test_single_tight_constraint(self):
        sol = solve_lp(knapsack_lp())
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(1.0, abs=1e-9)

    def test_contradictory_bounds_infeasible(self):
        p = LpProblem(c=[1.0], bounds=[(0.0, 1.0)])
        p.add_row([(0, 1.0)], -1.0)
        assert solve_lp(p).status == "infeasible"

    def test_negative_rhs_needs_phase1(self):
        # x1 + x2 >= 2 written as -x1 - x2 <= -2
        p = LpProblem(c=[-3.0, -4.0], bounds=[(0.0, 10.0), (0.0, 10.0)])
        p.add_row([(0, -1.0), (1, -1.0)], -2.0)
        sol = solve_lp(p)
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(-6.0, abs=1e-7)  # x=(2,0)

    def test_residuals_within_tolerance(self, rng):
        for _ in range(30):
            n = rng.randint(1, 6)
            m = rng.randint(1, 5)
            p = LpProblem(c=[rng.uniform(-2, 2) for _ in range(n)],
                          bounds=[(0.0, rng.uniform(0.5, 3)) for _ in range(n)])
            for _ in range(m):
                p.add_row([(j, rng.uniform(-1, 2)) for j in range(n)],
                          rng.uniform(0.5, 4))
            sol = solve_lp(p)
            if sol.status == "optimal":
                assert residuals(p, sol.x) <= 1e-7

    def test_determinism_bit_for_bit(self):
        p = knapsack_lp()
        a = solve_lp(p)
        b = solve_lp(p)
        assert a.x.tobytes() == b.x.tobytes()
        assert a.value == b.value

    def test_engines_agree(self, rng):
        for _ in range(10):
            n = rng.randint(2, 8)
            p = LpProblem(c=[rng.uniform(0, 3) for _ in range(n)],
                          bounds=[(0.0, 1.0)] * n)
            p.add_row([(j, rng.uniform(0.5, 2)) for j in range(n)],
                      rng.uniform(1, n))
            s1 = solve_lp(p, engine="simplex")
            s2 = solve_lp(p, engine="highs")
            assert s1.status == s2.status == "optimal"
            assert s1.value == pytest.approx(s2.value, rel=1e-6)


class TestFixVariable:
    def test_fix_then_solve(self):
        p = fix_variable(knapsack_lp(), 1, 1.0)
        sol = solve_lp(p)
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(1.0)
        assert sol.x[0] == pytest.approx(0.0, abs=1e-9)
        assert sol.x[1] == 1.0

    def test_fix_all_returns_constant(self):
        p = knapsack_lp()
        p = fix_variable(p, 0, 0.5)
        p = fix_variable(p, 1, 0.25)
        sol = solve_lp(p)
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(0.75)

    def test_out_of_bounds_value_rejected(self):
        with pytest.raises(LpError):
            fix_variable(knapsack_lp(), 0, 2.0)

    def test_fixing_equals_reduced_problem(self, rng):
        for _ in range(20):
            n = rng.randint(2, 5)
            c = [rng.uniform(0, 2) for _ in range(n)]
            rows = [[(j, rng.uniform(0.2, 1.5)) for j in range(n)]
                    for _ in range(rng.randint(1, 3))]
            rhs = [rng.uniform(1, 4) for _ in rows]
            p = LpProblem(c=list(c), bounds=[(0.0, 1.0)] * n)
            for row, b in zip(rows, rhs):
                p.add_row(list(row), b)
            k = rng.randrange(n)
            v = rng.uniform(0, 1)
            fixed = solve_lp(fix_variable(p, k, v))
            # same problem built from scratch without variable k
            keep = [j for j in range(n) if j != k]
            q = LpProblem(c=[c[j] for j in keep], bounds=[(0.0, 1.0)] * (n - 1))
            for row, b in zip(rows, rhs):
                coefs = {j: val for j, val in row}
                q.add_row([(keep.index(j), val) for j, val in row if j != k],
                          b - coefs.get(k, 0.0) * v)
            direct = solve_lp(q)
            assert fixed.status == direct.status
            if fixed.status == "optimal":
                assert fixed.value == pytest.approx(direct.value + c[k] * v, abs=1e-7)


def feasible_integer_points(instance):
    """All 0/1 assignments satisfying the simplified program's constraints."""
    n = len(instance.candidates)
    rows = instance.rows
    for assign in itertools.product(range(rows + 1), repeat=n):  # rows+1 = none
        loads = [0] * rows
        blanks = [0] * rows
        ok = True
        for i, r in enumerate(assign):
            if r == rows:
                continue
            c = instance.candidates[i]
            loads[r] += c.w - c.s
            blanks[r] = max(blanks[r], c.s)
        for r in range(rows):
            if loads[r] > instance.width - blanks[r]:
                ok = False
        if ok:
            yield assign


class TestSimplifiedProgram:
    def test_weak_duality_against_enumeration(self, rng):
        for _ in range(8):
            inst = random_instance_1d(rng, n=rng.randint(2, 6), rows=2, width=90)
            profits = update_profits(inst, evaluate(inst, ()))
            lp = build_simplified_lp(inst, [float(p) for p in profits])
            sol = solve_lp(lp)
            assert sol.status == "optimal"
            best = 0.0
            for assign in feasible_integer_points(inst):
                value = sum(profits[i] for i, r in enumerate(assign) if r < inst.rows)
                best = max(best, value)
            assert sol.value >= best - 1e-6

    def test_integer_points_match_lp_feasibility(self, rng):
        # a 0/1 point is LP-feasible (for some blank reserve) iff it satisfies
        # the capacity and one-row rules directly
        inst = random_instance_1d(rng, n=4, rows=2, width=70)
        n, rows = 4, inst.rows
        lp = build_simplified_lp(inst, [1.0] * n)
        for assign in itertools.product(range(rows + 1), repeat=n):
            x = np.zeros(n * rows + rows)
            loads = [0] * rows
            blanks = [0] * rows
            for i, r in enumerate(assign):
                if r < rows:
                    x[i * rows + r] = 1.0
                    c = inst.candidates[i]
                    loads[r] += c.w - c.s
                    blanks[r] = max(blanks[r], c.s)
            for r in range(rows):
                x[n * rows + r] = blanks[r]
            direct_ok = all(loads[r] + blanks[r] <= inst.width for r in range(rows))
            lp_ok = residuals(lp, x) <= 1e-9
            assert direct_ok == lp_ok
