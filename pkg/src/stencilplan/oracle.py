"""Exact reference solvers and greedy baselines for desk-scale certification.

These exist to certify the heuristics, not to scale: the 1d oracle covers
every subset, row partition and adjacency order of a tiny instance; the
knapsack oracle solves the symmetric-slack assignment relaxation's integer
companion exactly; the 2d oracle enumerates grid placements.  The greedy
baselines mirror the simple profit-density packers the pipelines are
compared against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (CharacterCandidate, Instance, Placement1D, Placement2D,
                    WritingTimeReport, evaluate, _pair_separated)
from .solver1d import RowState, canonical_order, refine_row, update_profits

MAX_EXACT_1D = 14
MAX_EXACT_ORDERINGS = 16
MAX_EXACT_2D = 6


@dataclass
class OracleResult:
    optimum: float
    witness: object
    explored: int


def enumerate_orderings(cands: Sequence[CharacterCandidate]) -> list[tuple[int, int, int, int]]:
    """All (width, left, right, trace) triplets over the 2^(k−1) end insertions."""
    order = canonical_order(cands)
    if not order:
        raise ValueError("row must be nonempty")
    if len(order) > MAX_EXACT_ORDERINGS:
        raise ValueError(f"exact ordering enumeration capped at {MAX_EXACT_ORDERINGS}")
    first = order[0]
    sols = [(first.w, first.sl, first.sr, 0)]
    for k, c in enumerate(order[1:]):
        bit = 1 << k
        sols = [ext for w, l, r, tr in sols
                for ext in ((w + c.w - min(c.sr, l), c.sl, r, tr | bit),
                            (w + c.w - min(c.sl, r), l, c.sr, tr))]
    return sols


def exact_orderings(cands: Sequence[CharacterCandidate]) -> OracleResult:
    """Minimum row width over every left/right insertion trace."""
    sols = enumerate_orderings(cands)
    w, l, r, trace = min(sols, key=lambda s: (s[0], -s[1], -s[2], s[3]))
    return OracleResult(optimum=w, witness={"left": l, "right": r, "trace": trace},
                        explored=len(sols))


def _min_spans(cands: Sequence[CharacterCandidate]):
    """Held–Karp: minimal pattern extent of every subset over all adjacency orders.

    dp[mask][last] is the tightest pattern chain of ``mask`` ending at
    ``last``; adjacent patterns sit max(sr_left, sl_right) apart.
    """
    n = len(cands)
    pw = [c.pw for c in cands]
    gap = [[max(a.sr, b.sl) for b in cands] for a in cands]
    size = 1 << n
    inf = float("inf")
    dp = [[inf] * n for _ in range(size)]
    for i in range(n):
        dp[1 << i][i] = pw[i]
    for mask in range(size):
        row = dp[mask]
        for last in range(n):
            cur = row[last]
            if cur == inf:
                continue
            rest = ~mask & (size - 1)
            nxt = rest
            while nxt:
                j = (nxt & -nxt).bit_length() - 1
                cand = cur + gap[last][j] + pw[j]
                m2 = mask | (1 << j)
                if cand < dp[m2][j]:
                    dp[m2][j] = cand
                nxt &= nxt - 1
    spans = [0] * size
    for mask in range(1, size):
        spans[mask] = min(dp[mask])
    return dp, spans, gap, pw


def _chain_order(dp, gap, pw, mask: int) -> list[int]:
    """Backtrack one optimal adjacency order of ``mask``."""
    order: list[int] = []
    best = min(range(len(pw)), key=lambda j: (dp[mask][j], j) if mask >> j & 1
               else (float("inf"), j))
    last = best
    while mask:
        order.append(last)
        prev_mask = mask & ~(1 << last)
        if not prev_mask:
            break
        target = dp[mask][last]
        for j in range(len(pw)):
            if prev_mask >> j & 1 and dp[prev_mask][j] + gap[j][last] + pw[last] == target:
                mask, last = prev_mask, j
                break
        else:
            raise AssertionError("chain backtrack failed")
    order.reverse()
    return order


def exact_1d(instance: Instance) -> OracleResult:
    """Global minimum writing time over subset × row partition × order.

    Exhaustive in effect: per-subset minimal pattern extents come from a
    Held–Karp pass covering every adjacency permutation, and a submask
    dynamic program covers every partition into the available rows.
    """
    if instance.mode != "1d":
        raise ValueError("exact_1d needs a 1d instance")
    cands = instance.candidates
    n = len(cands)
    if n > MAX_EXACT_1D:
        raise ValueError(f"exact_1d capped at {MAX_EXACT_1D} candidates")
    size = 1 << n
    dp, spans, gap, pw = _min_spans(cands)
    feasible_row = [spans[m] <= instance.width for m in range(size)]
    feasible_row[0] = True

    layers = [[feasible_row[m] for m in range(size)]]
    for _ in range(instance.rows - 1):
        prev = layers[-1]
        nxt = [False] * size
        for mask in range(size):
            if prev[mask]:
                nxt[mask] = True
                continue
            sub = mask
            ok = False
            while sub:
                if feasible_row[sub] and prev[mask ^ sub]:
                    ok = True
                    break
                sub = (sub - 1) & mask
            nxt[mask] = ok
        layers.append(nxt)
    packable = layers[-1]

    red = instance.reductions
    vsb = instance.vsb_times
    best_mask = 0
    best_t = int(vsb.max()) if len(vsb) else 0
    explored = 0
    for mask in range(size):
        if not packable[mask]:
            continue
        explored += 1
        ids = [i for i in range(n) if mask >> i & 1]
        t = int((vsb - red[ids].sum(axis=0)).max()) if ids else int(vsb.max())
        if t < best_t or (t == best_t and mask < best_mask):
            best_t, best_mask = t, mask

    # Peel one feasible row per layer to reconstruct a witness partition.
    rows: list[list[int]] = []
    mask = best_mask
    for k in range(instance.rows - 1, 0, -1):
        if layers[k - 1][mask]:
            rows.append([])
            continue
        sub = mask
        while sub:
            if feasible_row[sub] and layers[k - 1][mask ^ sub]:
                break
            sub = (sub - 1) & mask
        rows.append(_chain_order(dp, gap, pw, sub) if sub else [])
        mask ^= sub
    rows.append(_chain_order(dp, gap, pw, mask) if mask else [])

    placement_rows: list[list[tuple[int, int]]] = []
    for row in rows:
        entries: list[tuple[int, int]] = []
        x_pat = 0
        for k, idx in enumerate(row):
            c = cands[idx]
            if k > 0:
                x_pat += gap[row[k - 1]][idx]
            entries.append((c.id, x_pat - c.sl))
            x_pat += c.pw
        placement_rows.append(entries)
    witness = Placement1D(rows=placement_rows)
    return OracleResult(optimum=best_t, witness=witness, explored=explored)


def exact_knapsack_3prime(instance: Instance, profits: Sequence[float]) -> OracleResult:
    """Exact optimum of the multiple-knapsack companion of the assignment program.

    Every row gets the same capacity W − max_i s_i; item sizes are w_i − s_i.
    Branch and bound over density order with a fractional upper bound and
    first-empty-bin symmetry breaking.
    """
    if instance.mode != "1d":
        raise ValueError("exact_knapsack_3prime needs a 1d instance")
    cands = instance.candidates
    max_s = max((c.s for c in cands), default=0)
    cap = instance.width - max_s
    items = sorted(
        ((c.w - c.s, float(profits[k]), c.id) for k, c in enumerate(cands)
         if c.w - c.s <= cap),
        key=lambda it: (-(it[1] / it[0]), it[2]))
    m = instance.rows
    best_profit = 0.0
    best_assign: dict[int, int] = {}
    explored = 0

    suffix = [(size, profit) for size, profit, _ in items]

    def bound(k: int, free: int) -> float:
        total = 0.0
        for size, profit in suffix[k:]:
            if size <= free:
                free -= size
                total += profit
            else:
                total += profit * free / size
                break
        return total

    caps = [cap] * m
    assign: dict[int, int] = {}

    def rec(k: int, cur: float) -> None:
        nonlocal best_profit, best_assign, explored
        explored += 1
        if cur > best_profit:
            best_profit = cur
            best_assign = dict(assign)
        if k == len(items):
            return
        if cur + bound(k, sum(caps)) <= best_profit:
            return
        size, profit, cid = items[k]
        seen: set[int] = set()
        for j in range(m):
            if caps[j] in seen or caps[j] < size:
                continue
            seen.add(caps[j])
            caps[j] -= size
            assign[cid] = j
            rec(k + 1, cur + profit)
            del assign[cid]
            caps[j] += size
        rec(k + 1, cur)

    rec(0, 0.0)
    return OracleResult(optimum=best_profit, witness=best_assign, explored=explored)


def exact_2d(instance: Instance, grid_step: int = 5) -> OracleResult:
    """Minimum writing time over subsets placed on a coarse grid.

    Pattern corners are restricted to multiples of ``grid_step``; with all
    extents, blanks and the outline on that grid the restriction is lossless,
    otherwise the result only bounds grid-aligned placements.
    """
    if instance.mode != "2d":
        raise ValueError("exact_2d needs a 2d instance")
    cands = instance.candidates
    n = len(cands)
    if n > MAX_EXACT_2D:
        raise ValueError(f"exact_2d capped at {MAX_EXACT_2D} candidates")
    red = instance.reductions
    vsb = instance.vsb_times
    explored = 0

    masks = sorted(range(1 << n), key=lambda m: (
        int((vsb - red[[i for i in range(n) if m >> i & 1]].sum(axis=0)).max())
        if m else int(vsb.max()), m))

    def positions(c: CharacterCandidate) -> list[tuple[int, int]]:
        xs = range(0, instance.width - c.pw + 1, grid_step)
        ys = range(0, instance.height - c.ph + 1, grid_step)
        return [(x - c.sl, y - c.sb) for x in xs for y in ys]

    def place(ids: list[int], k: int, placed: list[tuple[CharacterCandidate, int, int]]):
        nonlocal explored
        if k == len(ids):
            return list(placed)
        c = cands[ids[k]]
        for bx, by in positions(c):
            explored += 1
            if all(_pair_separated(c, bx, by, o, ox, oy) for o, ox, oy in placed):
                placed.append((c, bx, by))
                found = place(ids, k + 1, placed)
                placed.pop()
                if found is not None:
                    return found
        return None

    for mask in masks:
        ids = [i for i in range(n) if mask >> i & 1]
        if any(cands[i].pw > instance.width or cands[i].ph > instance.height for i in ids):
            continue
        layout = place(ids, 0, [])
        if layout is None:
            continue
        t = int((vsb - red[ids].sum(axis=0)).max()) if ids else int(vsb.max())
        placed = [(c.id, x, y) for c, x, y in layout]
        perm = tuple(sorted(cid for cid, _, _ in placed))
        witness = Placement2D(placed=placed, seq_pair=(perm, perm))
        return OracleResult(optimum=t, witness=witness, explored=explored)
    return OracleResult(optimum=int(vsb.max()) if len(vsb) else 0,
                        witness=Placement2D(placed=[], seq_pair=((), ())),
                        explored=explored)


# ---------------------------------------------------------------------------
# Greedy baselines ("the simple packer the pipelines must beat").

def greedy_baseline_1d(instance: Instance) -> tuple[Placement1D, WritingTimeReport]:
    """Profit-density first fit into rows under the symmetric-slack capacity."""
    if instance.mode != "1d":
        raise ValueError("greedy_baseline_1d needs a 1d instance")
    profits = update_profits(instance, evaluate(instance, ()))
    index_of = {c.id: k for k, c in enumerate(instance.candidates)}
    order = sorted(instance.candidates,
                   key=lambda c: (-(profits[index_of[c.id]] / (c.w - c.s)), c.id))
    rows = [RowState(j) for j in range(instance.rows)]
    for c in order:
        for state in rows:
            if state.fits(c, instance.width):
                state.add(c)
                break
    placement_rows: list[list[tuple[int, int]]] = []
    for state in rows:
        members = [instance.by_id[cid] for cid in state.ids]
        while members:
            refined = refine_row(members)
            if refined.span <= instance.width:
                placement_rows.append(list(zip(refined.ids, refined.xs)))
                break
            drop = min(members, key=lambda c: (profits[index_of[c.id]], -c.id))
            members = [c for c in members if c.id != drop.id]
        else:
            placement_rows.append([])
    placement = Placement1D(rows=placement_rows)
    placed = {cid for row in placement_rows for cid, _ in row}
    return placement, evaluate(instance, placed)


def greedy_baseline_2d(instance: Instance) -> tuple[Placement2D, WritingTimeReport]:
    """Profit-density shelf packing with full blanks (no sharing)."""
    if instance.mode != "2d":
        raise ValueError("greedy_baseline_2d needs a 2d instance")
    profits = update_profits(instance, evaluate(instance, ()))
    index_of = {c.id: k for k, c in enumerate(instance.candidates)}
    order = sorted(instance.candidates,
                   key=lambda c: (-(profits[index_of[c.id]] / (c.w * c.h)), c.id))
    shelves: list[list[tuple[int, int, int]]] = []  # (id, x, y)
    shelf: list[tuple[int, int, int]] = []
    x = y = shelf_h = 0
    for c in order:
        if shelf and (x + c.w > instance.width or y + max(shelf_h, c.h) > instance.height):
            if y + shelf_h + c.h <= instance.height and c.w <= instance.width:
                shelves.append(shelf)
                y += shelf_h
                shelf, x, shelf_h = [], 0, 0
            else:
                continue
        if x + c.w > instance.width or y + c.h > instance.height:
            continue
        shelf.append((c.id, x, y))
        x += c.w
        shelf_h = max(shelf_h, c.h)
    if shelf:
        shelves.append(shelf)
    placed = [entry for row in shelves for entry in row]
    g1 = [cid for row in reversed(shelves) for cid, _, _ in row]
    g2 = [cid for row in shelves for cid, _, _ in row]
    placement = Placement2D(placed=placed, seq_pair=(tuple(g1), tuple(g2)))
    return placement, evaluate(instance, [cid for cid, _, _ in placed])
