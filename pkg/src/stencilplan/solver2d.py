"""Free two-dimensional stencil planning.

Pipeline: drop low-profit candidates, cluster pairs with similar blank
margins and profits into super-characters (a k-d tree over the (horizontal
slack, vertical slack, profit) signature finds partners), then pack the
surviving objects with sequence-pair simulated annealing inside the fixed
stencil outline.  Clusters enter and leave the placed set as a whole;
objects whose pattern ends up outside the outline simply contribute no
shot-count reduction, and the final report keeps only in-outline members.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kdtree import KdTree
from .model import (CharacterCandidate, Instance, Placement2D, WritingTimeReport,
                    evaluate)
from .solver1d import update_profits


def baseline_profits(instance: Instance) -> np.ndarray:
    """Profits at the all-rectangle baseline (nothing selected yet)."""
    return update_profits(instance, evaluate(instance, ()))


def pre_filter(instance: Instance, keep_fraction: float) -> list[CharacterCandidate]:
    """Keep the ceil(keep_fraction·n) candidates with highest baseline profit."""
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError("keep_fraction must be in (0, 1]")
    profits = baseline_profits(instance)
    index_of = {c.id: k for k, c in enumerate(instance.candidates)}
    order = sorted(instance.candidates, key=lambda c: (-profits[index_of[c.id]], c.id))
    keep = math.ceil(keep_fraction * len(order))
    return order[:keep]


@dataclass
class PackObject:
    """A placeable object: a single candidate or a merged cluster.

    ``members`` holds (candidate id, dx, dy) blank-box offsets inside the
    object's blank box; ``g1``/``g2`` are the member expansion orders that
    keep a derived member-level sequence pair consistent with the merge
    geometry.  ``red`` aggregates the members' per-region reductions.
    """

    key: int
    w: int
    h: int
    sl: int
    sr: int
    st: int
    sb: int
    members: list[tuple[int, int, int]]
    red: np.ndarray
    profit: float
    g1: list[int] = field(default_factory=list)
    g2: list[int] = field(default_factory=list)

    @property
    def hslack(self) -> int:
        return self.sl + self.sr

    @property
    def vslack(self) -> int:
        return self.st + self.sb

    @property
    def area(self) -> int:
        return self.w * self.h

    def signature(self) -> tuple[float, float, float]:
        return (float(self.hslack), float(self.vslack), float(self.profit))


def leaf_objects(cands: Sequence[CharacterCandidate],
                 profits: Sequence[float]) -> list[PackObject]:
    return [PackObject(key=k, w=c.w, h=c.h, sl=c.sl, sr=c.sr, st=c.st, sb=c.sb,
                       members=[(c.id, 0, 0)],
                       red=np.array([u * (c.n - 1) for u in c.t], dtype=np.int64),
                       profit=float(profits[k]), g1=[c.id], g2=[c.id])
            for k, c in enumerate(cands)]


def _merge_horizontal(a: PackObject, b: PackObject, key: int) -> PackObject:
    dx = a.w - min(a.sr, b.sl)
    w = dx + b.w
    h = max(a.h, b.h)
    pattern_top = max(a.h - a.st, b.h - b.st)
    return PackObject(
        key=key, w=w, h=h, sl=a.sl, sr=b.sr, st=h - pattern_top, sb=min(a.sb, b.sb),
        members=a.members + [(cid, mx + dx, my) for cid, mx, my in b.members],
        red=a.red + b.red, profit=a.profit + b.profit,
        g1=a.g1 + b.g1, g2=a.g2 + b.g2)


def _merge_vertical(a: PackObject, b: PackObject, key: int) -> PackObject:
    # a below b, left box edges aligned
    dy = a.h - min(a.st, b.sb)
    h = dy + b.h
    w = max(a.w, b.w)
    pattern_right = max(a.w - a.sr, b.w - b.sr)
    return PackObject(
        key=key, w=w, h=h, sl=min(a.sl, b.sl), sr=w - pattern_right, st=b.st, sb=a.sb,
        members=a.members + [(cid, mx, my + dy) for cid, mx, my in b.members],
        red=a.red + b.red, profit=a.profit + b.profit,
        g1=b.g1 + a.g1, g2=a.g2 + b.g2)


def merge_objects(a: PackObject, b: PackObject, key: int) -> PackObject:
    """Merge two objects in the orientation wasting less box area (tie: horizontal)."""
    hor = _merge_horizontal(a, b, key)
    ver = _merge_vertical(a, b, key)
    return hor if hor.area <= ver.area else ver


@dataclass
class ClusterResult:
    objects: list[PackObject]
    probes: int
    rounds: int
    merges: int


def cluster_candidates(cands: Sequence[CharacterCandidate], threshold: int,
                       slack_tol: float = 0.25, profit_tol: float = 0.5,
                       profits: Sequence[float] | None = None) -> ClusterResult:
    """Pairwise clustering rounds until ``threshold`` live objects remain.

    Each round walks the unclustered objects by descending profit and pairs
    each with the highest-profit object inside its similarity box (relative
    tolerances on the two slack axes and the profit axis); pairs merge in
    the orientation wasting less area.  Stops at the threshold or when a
    round produces no merge.
    """
    if threshold > len(cands):
        raise ValueError("threshold must be ≤ candidate count")
    if profits is None:
        # Self-contained baseline: region times from these candidates alone.
        regions = len(cands[0].t) if cands else 1
        vsb = [sum(c.t[r] * c.n for c in cands) for r in range(regions)]
        t_max = max(vsb) if vsb else 0
        profits = [sum((t / t_max if t_max else 0.0) * c.t[r] * (c.n - 1)
                       for r, t in enumerate(vsb)) for c in cands]
    live: dict[int, PackObject] = {o.key: o for o in leaf_objects(cands, profits)}
    next_key = len(live)
    tree = KdTree(3, [(o.signature(), o.key) for o in live.values()])
    rounds = merges = 0
    while len(live) > threshold:
        rounds += 1
        order = sorted(live.values(), key=lambda o: (-o.profit, o.key))
        taken: set[int] = set()
        staged: list[PackObject] = []
        count = len(live)
        for obj in order:
            if obj.key in taken:
                continue
            if count <= threshold:
                break
            hs, vs, p = obj.signature()
            lo = (hs * (1 - slack_tol), vs * (1 - slack_tol), p * (1 - profit_tol))
            hi = (hs * (1 + slack_tol), vs * (1 + slack_tol), p * (1 + profit_tol))
            partner_key = tree.best_in_box(lo, hi, score_axis=2,
                                           exclude={obj.key} | taken)
            if partner_key is None:
                continue
            partner = live[partner_key]
            merged = merge_objects(obj, partner, next_key)
            next_key += 1
            tree.delete(obj.signature(), obj.key)
            tree.delete(partner.signature(), partner.key)
            taken.update((obj.key, partner.key))
            staged.append(merged)
            merges += 1
            count -= 1
        if not staged:
            break
        for key in taken:
            del live[key]
        for obj in staged:
            live[obj.key] = obj
            tree.insert(obj.signature(), obj.key)
    objects = sorted(live.values(), key=lambda o: o.key)
    return ClusterResult(objects=objects, probes=tree.probes, rounds=rounds, merges=merges)


# ---------------------------------------------------------------------------
# Sequence-pair decoding.

def _decode(a1: np.ndarray, a2: np.ndarray, px: np.ndarray, py: np.ndarray):
    """Longest-path coordinates of the active objects of a sequence pair.

    An object left of another (earlier in both sequences) pushes it right by
    the shared-blank pitch; one below another (later in the first, earlier
    in the second) pushes it up likewise.
    """
    k = len(a1)
    n = px.shape[0]
    x = np.zeros(n, dtype=np.int64)
    y = np.zeros(n, dtype=np.int64)
    if k == 0:
        return x, y
    pos1 = np.zeros(n, dtype=np.int64)
    pos2 = np.zeros(n, dtype=np.int64)
    pos1[a1] = np.arange(k)
    pos2[a2] = np.arange(k)
    xs = np.zeros(k, dtype=np.int64)
    p2 = pos2[a1]
    for t in range(1, k):
        left = p2[:t] < p2[t]
        if left.any():
            xs[t] = (xs[:t] + px[a1[:t], a1[t]])[left].max()
    ys = np.zeros(k, dtype=np.int64)
    p1 = pos1[a2]
    for t in range(1, k):
        below = p1[:t] > p1[t]
        if below.any():
            ys[t] = (ys[:t] + py[a2[:t], a2[t]])[below].max()
    x[a1] = xs
    y[a2] = ys
    return x, y


def sp_pack(cands: Sequence[CharacterCandidate], seq1: Sequence[int],
            seq2: Sequence[int]) -> Placement2D:
    """Decode a candidate-level sequence pair to blank-box coordinates."""
    ids = sorted(c.id for c in cands)
    if sorted(seq1) != ids or sorted(seq2) != ids:
        raise ValueError("sequence pair must be permutations of the candidate ids")
    by_id = {c.id: c for c in cands}
    idx = {cid: k for k, cid in enumerate(by_id)}
    order = list(by_id)
    w = np.array([by_id[c].w for c in order], dtype=np.int64)
    h = np.array([by_id[c].h for c in order], dtype=np.int64)
    sl = np.array([by_id[c].sl for c in order], dtype=np.int64)
    sr = np.array([by_id[c].sr for c in order], dtype=np.int64)
    st = np.array([by_id[c].st for c in order], dtype=np.int64)
    sb = np.array([by_id[c].sb for c in order], dtype=np.int64)
    px = w[:, None] - np.minimum(sr[:, None], sl[None, :])
    py = h[:, None] - np.minimum(st[:, None], sb[None, :])
    a1 = np.array([idx[c] for c in seq1], dtype=np.int64)
    a2 = np.array([idx[c] for c in seq2], dtype=np.int64)
    x, y = _decode(a1, a2, px, py)
    placed = [(cid, int(x[idx[cid]]), int(y[idx[cid]])) for cid in seq1]
    return Placement2D(placed=placed, seq_pair=(tuple(seq1), tuple(seq2)))


# ---------------------------------------------------------------------------
# Simulated annealing over sequence pairs.

@dataclass
class SaParams:
    moves: int = 8000
    cooling: float = 0.97
    stop_ratio: float = 1e-3


@dataclass
class SaState:
    """Best-so-far snapshot of an annealing chain."""

    seq1: np.ndarray
    seq2: np.ndarray
    active: np.ndarray
    t_total: int


def _initial_shelves(objects: Sequence[PackObject], order: list[int],
                     width: int, height: int):
    """Profit-dense shelf construction with shared horizontal blanks."""
    shelves: list[list[int]] = []
    active = np.zeros(len(objects), dtype=bool)
    y = 0
    shelf: list[int] = []
    x_box = 0
    shelf_h = 0
    for k in order:
        o = objects[k]
        nx = x_box if not shelf else x_box - min(objects[shelf[-1]].sr, o.sl)
        if shelf and nx + o.w - o.sr > width:
            y += shelf_h
            shelves.append(shelf)
            shelf, x_box, shelf_h = [], 0, 0
            nx = 0
        if o.w - o.sr > width or y + o.h - o.st > height:
            continue  # left inactive
        shelf.append(k)
        active[k] = True
        x_box = nx + o.w
        shelf_h = max(shelf_h, o.h)
    if shelf:
        shelves.append(shelf)
    seq1 = [k for row in reversed(shelves) for k in row]
    seq2 = [k for row in shelves for k in row]
    parked = [k for k in order if not active[k]]
    seq1.extend(parked)
    seq2.extend(parked)
    return np.array(seq1, dtype=np.int64), np.array(seq2, dtype=np.int64), active


def sa_optimize(instance: Instance, objects: Sequence[PackObject],
                params: SaParams, seed: int
                ) -> tuple[Placement2D, WritingTimeReport]:
    """Anneal object placements inside the outline; return the best snapshot.

    Moves: swap two entries of the first sequence, swap in both sequences,
    or toggle an object in/out of the placed set.  Cost is the writing time
    of the in-outline objects plus a per-µm overflow penalty; the best state
    is tracked by true writing time, so out-of-outline objects never count.
    """
    if not objects:
        empty = Placement2D(placed=[], seq_pair=((), ()))
        return empty, evaluate(instance, ())
    m = len(objects)
    w = np.array([o.w for o in objects], dtype=np.int64)
    h = np.array([o.h for o in objects], dtype=np.int64)
    sl = np.array([o.sl for o in objects], dtype=np.int64)
    sr = np.array([o.sr for o in objects], dtype=np.int64)
    st = np.array([o.st for o in objects], dtype=np.int64)
    sb = np.array([o.sb for o in objects], dtype=np.int64)
    red = np.stack([o.red for o in objects])
    px = w[:, None] - np.minimum(sr[:, None], sl[None, :])
    py = h[:, None] - np.minimum(st[:, None], sb[None, :])
    vsb = instance.vsb_times
    width, height = instance.width, instance.height
    lam = float(max(1, red.sum(axis=1).max()))

    def cost_of(seq1, seq2, active):
        act = np.flatnonzero(active)
        a1 = seq1[active[seq1]]
        a2 = seq2[active[seq2]]
        x, y = _decode(a1, a2, px, py)
        pr = x[act] + w[act] - sr[act]
        pt = y[act] + h[act] - st[act]
        inside = (pr <= width) & (pt <= height)
        t = vsb - red[act[inside]].sum(axis=0) if inside.any() else vsb.copy()
        t_total = int(t.max())
        overflow = int(np.maximum(pr - width, 0).sum() + np.maximum(pt - height, 0).sum())
        return t_total + lam * overflow, t_total, x, y

    rng = random.Random(seed)
    density = [(-(o.profit / o.area), o.key, k) for k, o in enumerate(objects)]
    order = [k for _, _, k in sorted(density)]
    seq1, seq2, active = _initial_shelves(objects, order, width, height)
    cur_cost, cur_true, _, _ = cost_of(seq1, seq2, active)
    best = SaState(seq1.copy(), seq2.copy(), active.copy(), cur_true)

    def apply_move():
        kind = rng.random()
        if kind < 2 / 3 and m > 1:
            p, q = rng.randrange(m), rng.randrange(m)
            if kind < 1 / 3:
                seq1[p], seq1[q] = seq1[q], seq1[p]
                return ("s1", p, q)
            seq1[p], seq1[q] = seq1[q], seq1[p]
            i, j = np.flatnonzero(seq2 == seq1[q])[0], np.flatnonzero(seq2 == seq1[p])[0]
            seq2[i], seq2[j] = seq2[j], seq2[i]
            return ("s12", p, q, i, j)
        k = rng.randrange(m)
        active[k] = not active[k]
        return ("toggle", k)

    def revert(move):
        if move[0] == "s1":
            _, p, q = move
            seq1[p], seq1[q] = seq1[q], seq1[p]
        elif move[0] == "s12":
            _, p, q, i, j = move
            seq1[p], seq1[q] = seq1[q], seq1[p]
            seq2[i], seq2[j] = seq2[j], seq2[i]
        else:
            active[move[1]] = not active[move[1]]

    # Temperature from a short probe: aim for ~half of uphill moves accepted.
    ups = []
    for _ in range(min(100, max(0, params.moves))):
        move = apply_move()
        c, _, _, _ = cost_of(seq1, seq2, active)
        if c > cur_cost:
            ups.append(c - cur_cost)
        revert(move)
    t0 = (sum(ups) / len(ups)) / math.log(2.0) if ups else 1.0
    temp = max(t0, 1e-9)
    levels = max(1, math.ceil(math.log(params.stop_ratio) / math.log(params.cooling)))
    level_moves = max(1, round(params.moves / levels))

    for step in range(params.moves):
        move = apply_move()
        cost, true_t, _, _ = cost_of(seq1, seq2, active)
        delta = cost - cur_cost
        if delta <= 0 or rng.random() < math.exp(-min(delta / temp, 50.0)):
            cur_cost = cost
            if true_t < best.t_total:
                best = SaState(seq1.copy(), seq2.copy(), active.copy(), true_t)
        else:
            revert(move)
        if (step + 1) % level_moves == 0:
            temp *= params.cooling

    _, _, x, y = cost_of(best.seq1, best.seq2, best.active)
    act = np.flatnonzero(best.active)
    inside = {int(k) for k in act
              if x[k] + w[k] - sr[k] <= width and y[k] + h[k] - st[k] <= height}
    placed: list[tuple[int, int, int]] = []
    g1: list[int] = []
    g2: list[int] = []
    for k in best.seq1:
        if int(k) in inside:
            o = objects[int(k)]
            placed.extend((cid, int(x[k]) + dx, int(y[k]) + dy) for cid, dx, dy in o.members)
            g1.extend(o.g1)
    for k in best.seq2:
        if int(k) in inside:
            g2.extend(objects[int(k)].g2)
    placement = Placement2D(placed=placed, seq_pair=(tuple(g1), tuple(g2)))
    return placement, evaluate(instance, [cid for cid, _, _ in placed])


@dataclass
class Solve2dParams:
    keep_fraction: float = 0.8
    cluster_threshold: int | None = None  # default: half the kept candidates
    slack_tol: float = 0.25
    profit_tol: float = 0.5
    sa_moves: int = 8000
    cooling: float = 0.97
    stop_ratio: float = 1e-3
    seed: int = 0


def solve_2d(instance: Instance, params: Solve2dParams | None = None
             ) -> tuple[Placement2D, WritingTimeReport]:
    """Pre-filter, cluster, anneal, then expand clusters to members."""
    if instance.mode != "2d":
        raise ValueError("solve_2d needs a 2d instance")
    params = params or Solve2dParams()
    kept = pre_filter(instance, params.keep_fraction)
    profits_all = baseline_profits(instance)
    index_of = {c.id: k for k, c in enumerate(instance.candidates)}
    profits = [float(profits_all[index_of[c.id]]) for c in kept]
    threshold = params.cluster_threshold
    if threshold is None:
        threshold = max(1, math.ceil(len(kept) / 2)) if kept else 0
    clustered = cluster_candidates(kept, threshold, params.slack_tol,
                                   params.profit_tol, profits)
    sa = SaParams(moves=params.sa_moves, cooling=params.cooling,
                  stop_ratio=params.stop_ratio)
    return sa_optimize(instance, clustered.objects, sa, params.seed)
