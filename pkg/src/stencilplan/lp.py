"""Bounded-variable linear programming kernel.

Solves  max cᵀx  s.t.  A·x ≤ b,  lo ≤ x ≤ hi  with every bound finite and
lo ≥ 0.  Problems small enough for a dense tableau run through the built-in
bounded-variable primal simplex with Bland's anti-cycling rule; larger ones
are handed to HiGHS dual simplex via scipy behind the same contract.  Both
paths are deterministic for a fixed problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS = 1e-7

# Dense-tableau cutoff: beyond this many rows or free columns the tableau
# no longer fits the time/memory budget and HiGHS takes over.
SIMPLEX_MAX_ROWS = 600
SIMPLEX_MAX_COLS = 600


class LpError(ValueError):
    pass


@dataclass
class LpProblem:
    """max cᵀx s.t. rows (sparse: list of (col, coef) pairs) ≤ b, lo ≤ x ≤ hi."""

    c: list[float]
    bounds: list[tuple[float, float]]
    rows: list[list[tuple[int, float]]] = field(default_factory=list)
    b: list[float] = field(default_factory=list)
    fixed: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.c) != len(self.bounds):
            raise LpError("objective and bounds lengths differ")
        for j, (lo, hi) in enumerate(self.bounds):
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise LpError(f"bounds of variable {j} must be finite")
            if lo < 0:
                raise LpError(f"lower bound of variable {j} must be ≥ 0")
            if lo > hi:
                raise LpError(f"variable {j} has lo > hi")
        if len(self.rows) != len(self.b):
            raise LpError("row and rhs counts differ")
        n = len(self.c)
        for i, row in enumerate(self.rows):
            for j, _ in row:
                if not 0 <= j < n:
                    raise LpError(f"row {i} references variable {j} out of range")

    def add_row(self, coefs: list[tuple[int, float]], rhs: float) -> None:
        n = len(self.c)
        for j, _ in coefs:
            if not 0 <= j < n:
                raise LpError(f"row references variable {j} out of range")
        self.rows.append(list(coefs))
        self.b.append(float(rhs))


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray
    value: float
    iterations: int


def fix_variable(problem: LpProblem, index: int, value: float) -> LpProblem:
    """Pin a variable to a constant; its contributions fold into the rhs."""
    if not 0 <= index < len(problem.c):
        raise LpError(f"variable {index} out of range")
    lo, hi = problem.bounds[index]
    if not lo - EPS <= value <= hi + EPS:
        raise LpError(f"value {value} outside bounds [{lo}, {hi}] of variable {index}")
    fixed = dict(problem.fixed)
    fixed[index] = float(value)
    return LpProblem(c=list(problem.c), bounds=list(problem.bounds),
                     rows=[list(r) for r in problem.rows], b=list(problem.b), fixed=fixed)


def _reduce(problem: LpProblem):
    """Split fixed variables out: returns free index list, reduced arrays."""
    n = len(problem.c)
    free = [j for j in range(n) if j not in problem.fixed]
    pos = {j: k for k, j in enumerate(free)}
    const = sum(problem.c[j] * v for j, v in problem.fixed.items())
    rows = []
    b = []
    for row, rhs in zip(problem.rows, problem.b):
        shift = sum(coef * problem.fixed[j] for j, coef in row if j in problem.fixed)
        rows.append([(pos[j], coef) for j, coef in row if j not in problem.fixed])
        b.append(rhs - shift)
    c = np.array([problem.c[j] for j in free], dtype=float)
    lo = np.array([problem.bounds[j][0] for j in free], dtype=float)
    hi = np.array([problem.bounds[j][1] for j in free], dtype=float)
    return free, c, rows, np.array(b, dtype=float), lo, hi, const


def _simplex_bounded(c: np.ndarray, rows: list[list[tuple[int, float]]], b: np.ndarray,
                     lo: np.ndarray, hi: np.ndarray):
    """Two-phase dense primal simplex with upper bounds and Bland's rule.

    Nonbasic variables rest at a bound; the ratio test allows basic
    variables to leave at either bound and the entering variable to flip to
    its opposite bound.  Bland's rule (lowest eligible index, lowest basic
    index on ties) guarantees termination.
    """
    m = len(rows)
    n = len(c)
    nt = n + m  # structural + slack
    A = np.zeros((m, nt))
    for i, row in enumerate(rows):
        for j, coef in row:
            A[i, j] += coef
        A[i, n + i] = 1.0
    lo_t = np.concatenate([lo, np.zeros(m)])
    hi_t = np.concatenate([hi, np.full(m, np.inf)])

    # Start with structural variables at lower bound, slacks basic.
    x = lo_t.copy()
    x[n:] = b - A[:, :n] @ lo
    basis = list(range(n, nt))
    at_upper = np.zeros(nt, dtype=bool)

    # Rows whose slack starts negative get an artificial variable with
    # coefficient -1; phase 1 drives their sum to zero.
    art_rows = [i for i in range(m) if x[n + i] < -EPS]
    n_art = len(art_rows)
    if n_art:
        A = np.hstack([A, np.zeros((m, n_art))])
        lo_t = np.concatenate([lo_t, np.zeros(n_art)])
        hi_t = np.concatenate([hi_t, np.full(n_art, np.inf)])
        x = np.concatenate([x, np.zeros(n_art)])
        at_upper = np.concatenate([at_upper, np.zeros(n_art, dtype=bool)])
        for k, i in enumerate(art_rows):
            col = nt + k
            A[i, col] = -1.0
            x[col] = -x[n + i]
            x[n + i] = 0.0
            basis[i] = col
        at_upper[nt:] = False
    total = A.shape[1]

    T = A.copy()
    rhs_basic = x[basis].astype(float)
    # Reduce tableau so basic columns form the identity.
    for r, bv in enumerate(basis):
        if abs(T[r, bv] - 1.0) > 0:
            T[r] = T[r] / T[r, bv]
        for r2 in range(m):
            if r2 != r and abs(T[r2, bv]) > 0:
                T[r2] = T[r2] - T[r2, bv] * T[r]

    iterations = 0

    def run_phase(obj: np.ndarray, max_iter: int) -> str:
        nonlocal iterations
        for _ in range(max_iter):
            cb = obj[basis]
            d = obj - cb @ T  # reduced costs
            enter = -1
            for j in range(total):
                if j in basis_set:
                    continue
                if lo_t[j] == hi_t[j]:
                    continue
                if not at_upper[j] and d[j] > EPS:
                    enter = j
                    break
                if at_upper[j] and d[j] < -EPS:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            direction = 1.0 if not at_upper[enter] else -1.0
            col = T[:, enter] * direction
            # Max step before a basic variable hits a bound.
            best_t = hi_t[enter] - lo_t[enter]  # bound flip
            leave = -1
            leave_to_upper = False
            for i in range(m):
                bi = basis[i]
                if col[i] > EPS:
                    step = (x[bi] - lo_t[bi]) / col[i]
                    to_upper = False
                elif col[i] < -EPS:
                    if not np.isfinite(hi_t[bi]):
                        continue
                    step = (hi_t[bi] - x[bi]) / (-col[i])
                    to_upper = True
                else:
                    continue
                if step < best_t - EPS or (step < best_t + EPS and
                                           (leave < 0 or basis[i] < basis[leave])):
                    best_t = step
                    leave = i
                    leave_to_upper = to_upper
            if not np.isfinite(best_t):
                return "unbounded"
            best_t = max(best_t, 0.0)
            # Update values.
            x[enter] += direction * best_t
            for i in range(m):
                x[basis[i]] -= col[i] * best_t
            iterations += 1
            if leave < 0:
                at_upper[enter] = not at_upper[enter]
                continue
            out = basis[leave]
            x[out] = hi_t[out] if leave_to_upper else lo_t[out]
            at_upper[out] = leave_to_upper
            basis_set.discard(out)
            basis_set.add(enter)
            basis[leave] = enter
            piv = T[leave, enter]
            T[leave] = T[leave] / piv
            colv = T[:, enter].copy()
            for r2 in range(m):
                if r2 != leave and colv[r2] != 0.0:
                    T[r2] = T[r2] - colv[r2] * T[leave]
        return "iteration-limit"

    basis_set = set(basis)
    max_iter = 50 * (total + m) + 1000
    if n_art:
        phase1 = np.zeros(total)
        phase1[nt:] = -1.0  # maximize -(sum of artificials)
        status = run_phase(phase1, max_iter)
        if status == "iteration-limit":
            raise LpError("simplex iteration limit in phase 1")
        if sum(x[nt:]) > 1e-6:
            return "infeasible", x[:n], iterations
        # Freeze artificials at zero for phase 2.
        hi_t[nt:] = 0.0
        x[nt:] = 0.0

    obj = np.zeros(total)
    obj[:n] = c
    status = run_phase(obj, max_iter)
    if status == "iteration-limit":
        raise LpError("simplex iteration limit in phase 2")
    return status, x[:n].copy(), iterations


def _solve_highs(c, rows, b, lo, hi):
    from scipy.optimize import linprog
    from scipy.sparse import csr_matrix

    n = len(c)
    if rows:
        data, ri, ci = [], [], []
        for i, row in enumerate(rows):
            for j, coef in row:
                ri.append(i)
                ci.append(j)
                data.append(coef)
        a_ub = csr_matrix((data, (ri, ci)), shape=(len(rows), n))
        # Interior point (with crossover) wins on the large degenerate
        # assignment relaxations; dual simplex wins below that.
        method = "highs-ipm" if len(rows) > 5000 else "highs-ds"
        res = linprog(-c, A_ub=a_ub, b_ub=b, bounds=list(zip(lo, hi)), method=method)
    else:
        res = linprog(-c, bounds=list(zip(lo, hi)), method="highs-ds")
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status)
    if status is None:
        raise LpError(f"linprog failed: {res.message}")
    x = res.x if res.x is not None else np.zeros(n)
    return status, np.asarray(x, dtype=float), int(getattr(res, "nit", 0) or 0)


def solve_lp(problem: LpProblem, engine: str = "auto") -> LpSolution:
    """Solve the problem; fixed variables are treated as constants.

    ``engine`` may force "simplex" or "highs"; "auto" picks the dense
    simplex whenever the reduced problem fits the tableau budget.
    """
    free, c, rows, b, lo, hi, const = _reduce(problem)
    nfull = len(problem.c)

    def expand(xf: np.ndarray) -> np.ndarray:
        x = np.zeros(nfull)
        for k, j in enumerate(free):
            x[j] = xf[k]
        for j, v in problem.fixed.items():
            x[j] = v
        return x

    if not free:
        for rhs in b:
            if rhs < -EPS:
                return LpSolution("infeasible", expand(np.zeros(0)), 0.0, 0)
        return LpSolution("optimal", expand(np.zeros(0)), const, 0)

    if engine == "auto":
        engine = "simplex" if (len(rows) <= SIMPLEX_MAX_ROWS and len(free) <= SIMPLEX_MAX_COLS) \
            else "highs"
    if engine == "simplex":
        status, xf, iters = _simplex_bounded(c, rows, b, lo, hi)
    elif engine == "highs":
        status, xf, iters = _solve_highs(c, rows, b, lo, hi)
    else:
        raise LpError(f"unknown engine {engine!r}")

    if status != "optimal":
        return LpSolution(status, expand(np.clip(xf, lo, hi) if len(xf) else xf), 0.0, iters)
    value = float(c @ xf) + const
    return LpSolution("optimal", expand(xf), value, iters)


def residuals(problem: LpProblem, x: np.ndarray) -> float:
    """Largest constraint/bound violation of x; ≤ EPS for optimal returns."""
    worst = 0.0
    for row, rhs in zip(problem.rows, problem.b):
        worst = max(worst, sum(coef * x[j] for j, coef in row) - rhs)
    for j, (lo, hi) in enumerate(problem.bounds):
        worst = max(worst, lo - x[j], x[j] - hi)
    for j, v in problem.fixed.items():
        worst = max(worst, abs(x[j] - v))
    return worst
