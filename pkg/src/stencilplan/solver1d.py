"""Row-structured stencil planning pipeline.

Selection and row assignment run under a symmetric-slack model: each
character's left/right blanks are replaced by s_i = ceil((sl+sr)/2), which
makes the minimum row width a closed form (sum of w_i − s_i plus the
largest s_i) and turns the assignment into a linear program with one 0/1
variable per (character, row).  The LP is relaxed and rounded successively:
after each solve, variables near the maximum value are permanently fixed,
row capacities shrink, and per-character profits are re-weighted toward the
currently slowest wafer region.  A dynamic program then re-orders each row
with the true asymmetric blanks, and freed width is filled greedily.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .lp import LpProblem, LpSolution, solve_lp
from .model import (CharacterCandidate, Instance, Placement1D, WritingTimeReport,
                    evaluate)

FIX_EPS = 1e-7


def symmetric_slack(cand: CharacterCandidate) -> int:
    """ceil((sl + sr) / 2): the shared-blank margin used on both sides."""
    return (cand.sl + cand.sr + 1) // 2


def canonical_order(cands: Sequence[CharacterCandidate]) -> list[CharacterCandidate]:
    """Decreasing symmetric slack, ties by ascending id."""
    return sorted(cands, key=lambda c: (-c.s, c.id))


def row_width_symmetric(cands: Sequence[CharacterCandidate]) -> int:
    """Minimum packed width under symmetric slacks: Σ(w_i − s_i) + max s_i."""
    if not cands:
        raise ValueError("row must be nonempty")
    return sum(c.w - c.s for c in cands) + max(c.s for c in cands)


def greedy_row_order(cands: Sequence[CharacterCandidate]) -> list[tuple[int, int]]:
    """Order a row by decreasing slack, inserting each character at an end.

    Under symmetric slacks every insertion overlaps exactly the new
    character's slack, so both ends tie; the right end is used.  Returned x
    positions use the symmetric pitch w_i − min(s_i, s_j) and achieve
    row_width_symmetric.
    """
    order = canonical_order(cands)
    if not order:
        return []
    placed = [(order[0].id, 0)]
    x_end, end = 0, order[0]
    for c in order[1:]:
        x_end = x_end + end.w - min(end.s, c.s)
        placed.append((c.id, x_end))
        end = c
    return placed


@dataclass
class RefinedRow:
    """Best left/right insertion ordering of a row with true blanks."""

    ids: list[int]          # left-to-right
    xs: list[int]           # blank-box x, leftmost pattern at 0
    width: int              # packed width, outer blanks included
    left: int               # exposed left blank
    right: int              # exposed right blank

    @property
    def span(self) -> int:
        """Pattern extent, the part that must fit the stencil width."""
        return self.width - self.left - self.right


def _prune_solutions(sols: list[tuple[int, int, int, int]], cap: int):
    """Keep the Pareto frontier over (−width, left, right), then cap by width.

    A solution is dropped when another has width ≤, left ≥ and right ≥ with
    at least one strict; capping keeps the ``cap`` smallest widths.
    """
    best: dict[tuple[int, int], tuple[int, int]] = {}
    for w, l, r, tr in sols:
        key = (l, r)
        cur = best.get(key)
        if cur is None or (w, tr) < cur:
            best[key] = (w, tr)
    items = sorted(((w, l, r, tr) for (l, r), (w, tr) in best.items()),
                   key=lambda s: (s[0], -s[1], -s[2]))
    kept: list[tuple[int, int, int, int]] = []
    maxr: dict[int, int] = {}
    for w, l, r, tr in items:
        if any(l2 >= l and r2 >= r for l2, r2 in maxr.items()):
            continue
        kept.append((w, l, r, tr))
        if maxr.get(l, -1) < r:
            maxr[l] = r
    if len(kept) > cap:
        kept = kept[:cap]
    return kept


def _refine_frontier(order: Sequence[CharacterCandidate],
                     cap: int) -> list[tuple[int, int, int, int]]:
    first = order[0]
    sols: list[tuple[int, int, int, int]] = [(first.w, first.sl, first.sr, 0)]
    for k, c in enumerate(order[1:]):
        nxt: list[tuple[int, int, int, int]] = []
        bit = 1 << k
        for w, l, r, tr in sols:
            nxt.append((w + c.w - min(c.sr, l), c.sl, r, tr | bit))  # insert left
            nxt.append((w + c.w - min(c.sl, r), l, c.sr, tr))        # insert right
        if len(nxt) >= cap:
            nxt = _prune_solutions(nxt, cap)
        sols = nxt
    return sols


def _layout_from_trace(order: Sequence[CharacterCandidate], trace: int,
                       w: int, l: int, r: int) -> RefinedRow:
    chain: list[tuple[CharacterCandidate, int]] = [(order[0], 0)]
    for k, c in enumerate(order[1:]):
        if trace & (1 << k):
            leftc, xl = chain[0]
            chain.insert(0, (c, xl - (c.w - min(c.sr, leftc.sl))))
        else:
            rightc, xr = chain[-1]
            chain.append((c, xr + rightc.w - min(rightc.sr, c.sl)))
    shift = -(chain[0][1] + chain[0][0].sl)
    return RefinedRow(ids=[c.id for c, _ in chain], xs=[x + shift for _, x in chain],
                      width=w, left=l, right=r)


def refine_row(cands: Sequence[CharacterCandidate], cap: int = 4096) -> RefinedRow:
    """Dynamic program over the 2^(k−1) end-insertion orders of a row.

    Characters are processed in canonical order; each partial solution is a
    (width, left slack, right slack) triplet plus its insertion trace.  The
    solution set is pruned to the Pareto frontier only once it reaches
    ``cap`` entries, so small rows are enumerated exhaustively.  Returns the
    minimum-width ordering.
    """
    order = canonical_order(cands)
    if not order:
        raise ValueError("row must be nonempty")
    sols = _refine_frontier(order, cap)
    w, l, r, trace = min(sols, key=lambda s: (s[0], -s[1], -s[2], s[3]))
    return _layout_from_trace(order, trace, w, l, r)


# ---------------------------------------------------------------------------
# Simplified assignment program and successive rounding.

@dataclass
class RowState:
    """Capacity bookkeeping for one row during rounding."""

    row: int
    ids: list[int] = field(default_factory=list)
    consumed: int = 0          # Σ (w_i − s_i) over assigned
    blank: int = 0             # max assigned s_i
    members: list[CharacterCandidate] = field(default_factory=list)

    def fits(self, cand: CharacterCandidate, width: int) -> bool:
        return self.consumed + (cand.w - cand.s) <= width - max(self.blank, cand.s)

    def fits_span(self, cand: CharacterCandidate, width: int) -> bool:
        """True asymmetric-blank feasibility: some refined ordering of the
        row plus ``cand`` keeps the pattern extent inside the stencil."""
        order = canonical_order(self.members + [cand])
        frontier = _refine_frontier(order, 4096)
        return any(w - l - r <= width for w, l, r, _ in frontier)

    def add(self, cand: CharacterCandidate) -> None:
        self.ids.append(cand.id)
        self.members.append(cand)
        self.consumed += cand.w - cand.s
        self.blank = max(self.blank, cand.s)


def _build_assignment_lp(cands: Sequence[CharacterCandidate], n_rows: int, width: int,
                         profits: Sequence[float], capacities: Sequence[int],
                         blank_floor: Sequence[int], blank_cap: int,
                         include_vacuous: bool) -> LpProblem:
    n = len(cands)
    n_vars = n * n_rows + n_rows
    c = [0.0] * n_vars
    bounds: list[tuple[float, float]] = []
    for i in range(n):
        for j in range(n_rows):
            c[i * n_rows + j] = float(profits[i])
            bounds.append((0.0, 1.0))
    for j in range(n_rows):
        bounds.append((float(blank_floor[j]), float(max(blank_cap, blank_floor[j]))))
    problem = LpProblem(c=c, bounds=bounds)
    b_index = n * n_rows
    for j in range(n_rows):  # row width with the shared-blank reserve
        row = [(i * n_rows + j, float(cands[i].w - cands[i].s)) for i in range(n)]
        row.append((b_index + j, 1.0))
        problem.add_row(row, float(capacities[j]))
    for i in range(n):       # reserve must cover each assigned slack
        s = cands[i].s
        for j in range(n_rows):
            if include_vacuous or s > blank_floor[j]:
                problem.add_row([(i * n_rows + j, float(s)), (b_index + j, -1.0)], 0.0)
    for i in range(n):       # a character joins at most one row
        problem.add_row([(i * n_rows + j, 1.0) for j in range(n_rows)], 1.0)
    return problem


def build_simplified_lp(instance: Instance, profits: Sequence[float]) -> LpProblem:
    """The relaxed assignment program for a 1d instance with given profits.

    Variables: a_ij in [0,1] for each (character i, row j), then one blank
    reserve per row in [0, max_i s_i].  Constraints: per-row capacity, the
    reserve-covers-slack rows, and one-row-per-character.
    """
    if len(profits) != len(instance.candidates):
        raise ValueError("profits length must match candidate count")
    blank_cap = max((c.s for c in instance.candidates), default=0)
    return _build_assignment_lp(
        instance.candidates, instance.rows, instance.width, profits,
        capacities=[instance.width] * instance.rows,
        blank_floor=[0] * instance.rows, blank_cap=blank_cap, include_vacuous=True)


def update_profits(instance: Instance, report: WritingTimeReport) -> np.ndarray:
    """Region-weighted profit of each candidate at the current writing times.

    profit_i = Σ_c (t_c / t_max) · (n_i − 1) · t_ic; slower regions weigh
    more, so selection pressure follows the current bottleneck.
    """
    t = np.asarray(report.per_region, dtype=np.float64)
    t_max = t.max() if len(t) else 0.0
    if t_max <= 0:
        return np.zeros(len(instance.candidates))
    return instance.reductions @ (t / t_max)


def succ_rounding(instance: Instance, th_inv: float = 0.9,
                  lp_engine: str = "auto", wave_fraction: float = 0.3) -> list[RowState]:
    """Successive LP relaxation and rounding of the assignment program.

    Each iteration recomputes profits from the writing times of the current
    partial selection, solves the relaxed program over the still-free
    characters, then permanently fixes free a_ij within ``th_inv`` of the
    largest insertable value, updating row capacities.  An iteration commits
    at most ``wave_fraction`` of the remaining row capacity, so later
    iterations see re-weighted profits and steer toward the slowest region
    instead of one iteration consuming the whole stencil.  Stops when an
    iteration fixes nothing.
    """
    if not 0.0 < th_inv <= 1.0:
        raise ValueError("th_inv must be in (0, 1]")
    if not 0.0 < wave_fraction <= 1.0:
        raise ValueError("wave_fraction must be in (0, 1]")
    if instance.mode != "1d":
        raise ValueError("succ_rounding needs a 1d instance")
    n_rows, width = instance.rows, instance.width
    rows = [RowState(j) for j in range(n_rows)]
    blank_cap = max((c.s for c in instance.candidates), default=0)
    assigned: set[int] = set()
    index_of = {c.id: k for k, c in enumerate(instance.candidates)}

    for _ in range(len(instance.candidates) + 1):
        free = [c for c in instance.candidates if c.id not in assigned]
        if not free:
            break
        profits_all = update_profits(instance, evaluate(instance, assigned))
        profits = [float(profits_all[index_of[c.id]]) for c in free]
        problem = _build_assignment_lp(
            free, n_rows, width, profits,
            capacities=[width - r.consumed for r in rows],
            blank_floor=[r.blank for r in rows], blank_cap=blank_cap,
            include_vacuous=False)
        sol = solve_lp(problem, engine=lp_engine)
        if sol.status != "optimal":
            raise RuntimeError(f"assignment relaxation came back {sol.status}")
        vals = sol.x[:len(free) * n_rows].reshape(len(free), n_rows)

        # "Can insert" means the capacity rule and the true-blank span guard
        # both pass, so refinement never has to evict a committed character.
        # Only LP-positive pairs are candidates, which keeps the guard cheap.
        insertable = [(vals[i, j], free[i].id, i, j)
                      for i in range(len(free)) for j in range(n_rows)
                      if vals[i, j] > FIX_EPS and rows[j].fits(free[i], width)
                      and rows[j].fits_span(free[i], width)]
        if not insertable:
            break
        a_pq = max(v for v, _, _, _ in insertable)
        threshold = a_pq * th_inv
        budget = wave_fraction * sum(
            max(0, width - r.consumed - r.blank) for r in rows)
        fixed_here = 0
        used = 0
        # LP vertex values tie at 1.0 en masse, so the in-threshold batch is
        # ordered by profit density recomputed after every commit: region
        # times shift with each fixed character and the next pick follows
        # the new bottleneck.
        batch = [(cid, i, j) for v, cid, i, j in insertable if v + FIX_EPS >= threshold]
        red = instance.reductions
        t_cur = np.asarray(evaluate(instance, assigned).per_region, dtype=np.float64)
        while batch:
            if fixed_here > 0 and used >= budget:
                break
            weights = t_cur / t_cur.max() if t_cur.max() > 0 else np.zeros_like(t_cur)
            best = max(batch, key=lambda e: (
                float(red[index_of[e[0]]] @ weights) / (free[e[1]].w - free[e[1]].s),
                -e[0], -e[2]))
            batch = [e for e in batch if e is not best]
            cid, i, j = best
            if cid in assigned:
                continue
            cand = free[i]
            target = None
            if rows[j].fits(cand, width) and rows[j].fits_span(cand, width):
                target = rows[j]
            else:
                # Rows are interchangeable under the capacity model; redirect
                # a blocked character instead of stranding it on a tie-break.
                for alt in rows:
                    if alt.fits(cand, width) and alt.fits_span(cand, width):
                        target = alt
                        break
            if target is None:
                continue
            target.add(cand)
            assigned.add(cid)
            batch = [e for e in batch if e[0] != cid]
            fixed_here += 1
            used += cand.w - cand.s
            t_cur = t_cur - red[index_of[cid]]
        if fixed_here == 0:
            break
    return rows


# ---------------------------------------------------------------------------
# Greedy insertion into leftover row width.

def _row_geometry(instance: Instance, row: list[tuple[int, int]]):
    first = instance.by_id[row[0][0]]
    last = instance.by_id[row[-1][0]]
    chain_w = (row[-1][1] + last.w) - row[0][1]
    return chain_w, first.sl, last.sr


def greedy_insertion(instance: Instance, placement: Placement1D,
                     unselected: Iterable[int]) -> Placement1D:
    """Insert leftover candidates at row ends while they still fit.

    Repeatedly takes the highest-profit unselected candidate (profits at the
    current writing times) that fits some row end, choosing the (row, end)
    with the smallest width increase; ties prefer the lowest row and the
    right end.  Rows are re-justified so the leftmost pattern sits at 0.
    """
    rows = [list(r) for r in placement.rows]
    selected = {cid for r in rows for cid, _ in r}
    pool = {cid for cid in unselected if cid in instance.by_id} - selected
    width = instance.width
    while pool:
        profits = update_profits(instance, evaluate(instance, selected))
        index_of = {c.id: k for k, c in enumerate(instance.candidates)}
        order = sorted(pool, key=lambda cid: (-profits[index_of[cid]], cid))
        inserted = False
        for cid in order:
            cand = instance.by_id[cid]
            best = None  # (dw, row index, end flag 0=right 1=left)
            for ridx, row in enumerate(rows):
                if not row:
                    if cand.pw <= width:
                        opt = (cand.w, ridx, 0)
                        if best is None or opt < best:
                            best = opt
                    continue
                chain_w, l, r = _row_geometry(instance, row)
                dw_r = cand.w - min(cand.sl, r)
                if chain_w + dw_r - l - cand.sr <= width:
                    opt = (dw_r, ridx, 0)
                    if best is None or opt < best:
                        best = opt
                dw_l = cand.w - min(cand.sr, l)
                if chain_w + dw_l - cand.sl - r <= width:
                    opt = (dw_l, ridx, 1)
                    if best is None or opt < best:
                        best = opt
            if best is None:
                continue
            _, ridx, end = best
            row = rows[ridx]
            if not row:
                row.append((cid, -cand.sl))
            elif end == 0:
                last = instance.by_id[row[-1][0]]
                row.append((cid, row[-1][1] + last.w - min(last.sr, cand.sl)))
            else:
                first = instance.by_id[row[0][0]]
                x_new = row[0][1] - (cand.w - min(cand.sr, first.sl))
                row.insert(0, (cid, x_new))
                shift = -(x_new + cand.sl)
                rows[ridx] = [(c, x + shift) for c, x in row]
            selected.add(cid)
            pool.discard(cid)
            inserted = True
            break
        if not inserted:
            break
    return Placement1D(rows=rows)


# ---------------------------------------------------------------------------
# Full pipeline.

@dataclass
class Solve1dParams:
    th_inv: float = 0.9
    refine_cap: int = 4096
    wave_fraction: float = 0.3
    lp_engine: str = "auto"


def refit_row(members: list[CharacterCandidate], width: int, cap: int,
              drop_key) -> tuple[list[CharacterCandidate], RefinedRow | None]:
    """Refine a row, preferring minimum width among orderings whose pattern
    extent fits the stencil; falls back to the minimum-extent ordering and,
    failing that, drops members by ``drop_key`` until something fits."""
    while members:
        order = canonical_order(members)
        frontier = _refine_frontier(order, cap)
        fitting = [s for s in frontier if s[0] - s[1] - s[2] <= width]
        if fitting:
            w, l, r, tr = min(fitting, key=lambda s: (s[0], -s[1], -s[2], s[3]))
            return members, _layout_from_trace(order, tr, w, l, r)
        drop = min(members, key=drop_key)
        members = [c for c in members if c.id != drop.id]
    return members, None


def solve_1d(instance: Instance, params: Solve1dParams | None = None
             ) -> tuple[Placement1D, WritingTimeReport]:
    """Rounding, per-row refinement, then greedy insertion.

    Rows packed under the symmetric-slack model can overflow the stencil
    once true asymmetric blanks are laid out; such rows fall back to the
    smallest-extent ordering on the refinement frontier, then drop their
    lowest-profit member (ties: larger id), and dropped candidates rejoin
    the insertion pool.
    """
    if instance.mode != "1d":
        raise ValueError("solve_1d needs a 1d instance")
    params = params or Solve1dParams()
    row_states = succ_rounding(instance, params.th_inv, lp_engine=params.lp_engine,
                               wave_fraction=params.wave_fraction)

    selected = {cid for r in row_states for cid in r.ids}
    profits = update_profits(instance, evaluate(instance, selected))
    index_of = {c.id: k for k, c in enumerate(instance.candidates)}
    drop_key = lambda c: (profits[index_of[c.id]], -c.id)

    rows: list[list[tuple[int, int]]] = []
    for state in row_states:
        members = [instance.by_id[cid] for cid in state.ids]
        _, refined = refit_row(members, instance.width, params.refine_cap, drop_key)
        rows.append(list(zip(refined.ids, refined.xs)) if refined else [])
    placement = Placement1D(rows=rows)

    placed = {cid for r in rows for cid, _ in r}
    unselected = [c.id for c in instance.candidates if c.id not in placed]
    placement = greedy_insertion(instance, placement, unselected)
    placed = {cid for r in placement.rows for cid, _ in r}
    return placement, evaluate(instance, placed)
