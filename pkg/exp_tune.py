"""Experiment: succ_rounding variants on preset small, seed 1."""
import time
import numpy as np
import stencilplan as sp
from stencilplan import GeneratorSpec
from stencilplan.solver1d import (RowState, _build_assignment_lp, update_profits,
                                  FIX_EPS, greedy_insertion, refit_row)
from stencilplan.lp import solve_lp
from stencilplan.model import evaluate, Placement1D


def rounding(inst, th_inv, wave_frac, per_commit, row_flex):
    n_rows, width = inst.rows, inst.width
    rows = [RowState(j) for j in range(n_rows)]
    blank_cap = max(c.s for c in inst.candidates)
    assigned = set()
    index_of = {c.id: k for k, c in enumerate(inst.candidates)}
    red = inst.reductions
    for _ in range(len(inst.candidates) + 1):
        free = [c for c in inst.candidates if c.id not in assigned]
        if not free:
            break
        profits_all = update_profits(inst, evaluate(inst, assigned))
        profits = [float(profits_all[index_of[c.id]]) for c in free]
        problem = _build_assignment_lp(free, n_rows, width, profits,
                                       capacities=[width - r.consumed for r in rows],
                                       blank_floor=[r.blank for r in rows],
                                       blank_cap=blank_cap, include_vacuous=False)
        sol = solve_lp(problem)
        vals = sol.x[:len(free) * n_rows].reshape(len(free), n_rows)
        insertable = [(vals[i, j], free[i].id, i, j)
                      for i in range(len(free)) for j in range(n_rows)
                      if vals[i, j] > FIX_EPS and rows[j].fits(free[i], width)
                      and rows[j].fits_span(free[i], width)]
        if not insertable:
            break
        a_pq = max(v for v, _, _, _ in insertable)
        threshold = a_pq * th_inv
        budget = wave_frac * sum(max(0, width - r.consumed - r.blank) for r in rows)
        fixed_here = used = 0
        batch = [(cid, i, j) for v, cid, i, j in insertable if v + FIX_EPS >= threshold]
        if per_commit:
            t_cur = np.asarray(evaluate(inst, assigned).per_region, dtype=np.float64)
            while batch:
                if fixed_here > 0 and used >= budget:
                    break
                w = t_cur / t_cur.max() if t_cur.max() > 0 else np.zeros_like(t_cur)
                best = max(batch, key=lambda e: (
                    float(red[index_of[e[0]]] @ w) / (free[e[1]].w - free[e[1]].s),
                    -e[0], -e[2]))
                batch = [e for e in batch if e is not best]
                cid, i, j = best
                if cid in assigned:
                    continue
                cand = free[i]
                target = None
                if rows[j].fits(cand, width) and rows[j].fits_span(cand, width):
                    target = rows[j]
                elif row_flex:
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
        else:
            dens = {c.id: profits[k] / (c.w - c.s) for k, c in enumerate(free)}
            for cid, i, j in sorted(batch, key=lambda e: (-dens[e[0]], e[0], e[2])):
                if cid in assigned:
                    continue
                if fixed_here > 0 and used >= budget:
                    break
                cand = free[i]
                target = None
                if rows[j].fits(cand, width) and rows[j].fits_span(cand, width):
                    target = rows[j]
                elif row_flex:
                    for alt in rows:
                        if alt.fits(cand, width) and alt.fits_span(cand, width):
                            target = alt
                            break
                if target is not None:
                    target.add(cand)
                    assigned.add(cid)
                    fixed_here += 1
                    used += cand.w - cand.s
        if fixed_here == 0:
            break
    return rows


def finish(inst, states):
    selected = {cid for r in states for cid in r.ids}
    profits = update_profits(inst, evaluate(inst, selected))
    idx = {c.id: k for k, c in enumerate(inst.candidates)}
    dk = lambda c: (profits[idx[c.id]], -c.id)
    rows = []
    for st in states:
        members = [inst.by_id[cid] for cid in st.ids]
        _, refined = refit_row(members, inst.width, 4096, dk)
        rows.append(list(zip(refined.ids, refined.xs)) if refined else [])
    pl = Placement1D(rows=rows)
    placed = {cid for row in rows for cid, _ in row}
    pl = greedy_insertion(inst, pl, [c.id for c in inst.candidates if c.id not in placed])
    placed = {cid for row in pl.rows for cid, _ in row}
    return pl, evaluate(inst, placed)


spec = GeneratorSpec.preset("small", mode="1d", regions=10)
inst = sp.generate_instance(spec, 1)
gpl, grep_ = sp.greedy_baseline_1d(inst)
print(f"greedy: {grep_.t_total} ({len(grep_.selected)}ch)", flush=True)

for th_inv in (0.9, 0.1):
    for wf in (0.3, 0.15):
        for pc in (True, False):
            for flex in (True, False):
                t0 = time.perf_counter()
                states = rounding(inst, th_inv, wf, pc, flex)
                pl, rep = finish(inst, states)
                dt = time.perf_counter() - t0
                ok = sp.validate_placement(inst, pl).feasible
                print(f"th={th_inv} wf={wf} percommit={int(pc)} flex={int(flex)}: "
                      f"T={rep.t_total}({len(rep.selected)}ch) "
                      f"ratio={rep.t_total/grep_.t_total:.4f} {dt:.0f}s feas={ok}", flush=True)
