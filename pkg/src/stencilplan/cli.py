"""Command-line front end: gen, solve, eval, oracle and bench subcommands."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

from . import model
from .model import (GeneratorSpec, InstanceError, Placement1D, Placement2D,
                    generate_instance, load_instance, load_placement,
                    save_instance, save_placement, validate_placement)
from .oracle import (exact_1d, exact_2d, exact_knapsack_3prime, exact_orderings,
                     greedy_baseline_1d, greedy_baseline_2d)
from .solver1d import Solve1dParams, solve_1d, update_profits
from .solver2d import Solve2dParams, solve_2d


def _write_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_report(report, runtime_ms: float, path: str | None, fmt: str) -> None:
    doc = report.to_dict(runtime_ms=runtime_ms)
    if fmt == "json":
        _write_json(doc, path)
        return
    rows = [["t_total", "sum_shots", "selected_count", "runtime_ms"],
            [report.t_total, report.sum_shots, len(report.selected), runtime_ms]]
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    else:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)


def cmd_gen(args) -> int:
    spec = GeneratorSpec.preset(args.preset, mode=args.mode, regions=args.regions)
    if args.count is not None:
        spec.count = args.count
    if args.width is not None:
        spec.width = args.width
    if args.height is not None:
        spec.height = args.height
    if args.row_height is not None:
        spec.row_height = args.row_height
    if args.region_skew is not None:
        spec.region_skew = args.region_skew
    instance = generate_instance(spec, args.seed)
    save_instance(instance, args.out)
    print(f"wrote {args.out}: {len(instance.candidates)} candidates, "
          f"{instance.width}x{instance.height} {instance.mode}")
    return 0


def _solve(instance, args):
    if instance.mode == "1d":
        params = Solve1dParams(th_inv=args.th_inv, refine_cap=args.refine_cap)
        return solve_1d(instance, params)
    params = Solve2dParams(keep_fraction=args.keep,
                           cluster_threshold=args.cluster_threshold,
                           sa_moves=args.sa_moves, cooling=args.cooling,
                           seed=args.seed)
    return solve_2d(instance, params)


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    start = time.perf_counter()
    placement, report = _solve(instance, args)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    check = validate_placement(instance, placement)
    if not check.feasible:
        v = check.violations[0]
        print(f"error: solver produced infeasible placement: {v.kind} {v.ids}")
        return 1
    if args.placement:
        save_placement(placement, args.placement)
    _write_report(report, runtime_ms, args.out, args.format)
    return 0


def cmd_eval(args) -> int:
    instance = load_instance(args.instance)
    placement = load_placement(args.placement)
    start = time.perf_counter()
    check = validate_placement(instance, placement)
    if not check.feasible:
        v = check.violations[0]
        print(f"infeasible: {v.kind} {v.ids}: {v.message}")
        return 1
    if isinstance(placement, Placement1D):
        placed = [cid for row in placement.rows for cid, _ in row]
    else:
        placed = [cid for cid, _, _ in placement.placed]
    report = model.evaluate(instance, placed)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    _write_report(report, runtime_ms, args.out, args.format)
    return 0


def cmd_oracle(args) -> int:
    instance = load_instance(args.instance)
    if args.which == "1d":
        result = exact_1d(instance)
    elif args.which == "2d":
        result = exact_2d(instance, grid_step=args.grid_step)
    elif args.which == "knapsack":
        profits = update_profits(instance, model.evaluate(instance, ()))
        result = exact_knapsack_3prime(instance, [float(p) for p in profits])
    elif args.which == "orderings":
        result = exact_orderings(instance.candidates)
    else:
        raise InstanceError(f"unknown oracle {args.which!r}")
    doc = {"oracle": args.which, "optimum": result.optimum, "explored": result.explored}
    _write_json(doc, args.out)
    return 0


def cmd_bench(args) -> int:
    seeds = [int(s) for s in args.seeds.split(",") if s]
    rows = [["instance", "algorithm", "shot", "char", "cpu_s"]]
    for seed in seeds:
        spec = GeneratorSpec.preset(args.preset, mode=args.mode, regions=args.regions)
        if args.count is not None:
            spec.count = args.count
        if args.region_skew is not None:
            spec.region_skew = args.region_skew
        instance = generate_instance(spec, seed)
        name = f"{args.preset}-{args.mode}-s{seed}"
        for algo in ("greedy", "pipeline"):
            start = time.perf_counter()
            if algo == "greedy":
                placement, report = (greedy_baseline_1d(instance) if args.mode == "1d"
                                     else greedy_baseline_2d(instance))
            else:
                placement, report = _solve(instance, args)
            cpu = time.perf_counter() - start
            check = validate_placement(instance, placement)
            if not check.feasible:
                print(f"error: {name}/{algo} infeasible placement")
                return 1
            rows.append([name, algo, report.t_total, len(report.selected), f"{cpu:.3f}"])
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    print(f"wrote {args.out}: {len(rows) - 1} rows")
    return 0


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--th-inv", type=float, default=0.9, dest="th_inv")
    p.add_argument("--refine-cap", type=int, default=4096, dest="refine_cap")
    p.add_argument("--keep", type=float, default=0.8)
    p.add_argument("--cluster-threshold", type=int, default=None, dest="cluster_threshold")
    p.add_argument("--sa-moves", type=int, default=8000, dest="sa_moves")
    p.add_argument("--cooling", type=float, default=0.97)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stencilplan",
                                     description="Stencil planning solver suite")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    p.add_argument("--preset", choices=("small", "large"), default="small")
    p.add_argument("--mode", choices=("1d", "2d"), default="1d")
    p.add_argument("--regions", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--row-height", type=int, default=None, dest="row_height")
    p.add_argument("--region-skew", type=float, default=None, dest="region_skew")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run the pipeline on an instance file")
    p.add_argument("instance")
    p.add_argument("--out", default=None)
    p.add_argument("--placement", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="validate a placement and report writing time")
    p.add_argument("instance")
    p.add_argument("placement")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="tiny-scale exact audits")
    p.add_argument("instance")
    p.add_argument("--which", choices=("1d", "2d", "knapsack", "orderings"), required=True)
    p.add_argument("--grid-step", type=int, default=5, dest="grid_step")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="greedy vs pipeline sweep to CSV")
    p.add_argument("--preset", choices=("small", "large"), default="small")
    p.add_argument("--mode", choices=("1d", "2d"), default="1d")
    p.add_argument("--regions", type=int, default=10)
    p.add_argument("--seeds", default="1,2,3")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--region-skew", type=float, default=None, dest="region_skew")
    p.add_argument("--out", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print(f"error: {exc}")
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
