"""Stencil planning solver suite for multi-column e-beam systems."""

from .model import (CharacterCandidate, GenerationError, GeneratorSpec, Instance,
                    InstanceError, InstanceFormatError, InstanceValidationError,
                    Placement1D, Placement2D, PlacementCheck, Violation,
                    WritingTimeReport, evaluate, generate_instance, load_instance,
                    load_placement, save_instance, save_placement,
                    validate_placement)
from .lp import LpProblem, LpSolution, fix_variable, solve_lp
from .solver1d import (RefinedRow, RowState, Solve1dParams, build_simplified_lp,
                       greedy_insertion, greedy_row_order, refine_row,
                       row_width_symmetric, solve_1d, succ_rounding,
                       symmetric_slack, update_profits)
from .kdtree import KdTree
from .solver2d import (ClusterResult, PackObject, SaParams, Solve2dParams,
                       cluster_candidates, pre_filter, sa_optimize, solve_2d,
                       sp_pack)
from .oracle import (OracleResult, exact_1d, exact_2d, exact_knapsack_3prime,
                     exact_orderings, greedy_baseline_1d, greedy_baseline_2d)

__all__ = [
    "CharacterCandidate", "ClusterResult", "GenerationError", "GeneratorSpec",
    "Instance", "InstanceError", "InstanceFormatError", "InstanceValidationError",
    "KdTree", "LpProblem", "LpSolution", "OracleResult", "PackObject",
    "Placement1D", "Placement2D", "PlacementCheck", "RefinedRow", "RowState",
    "SaParams", "Solve1dParams", "Solve2dParams", "Violation",
    "WritingTimeReport", "build_simplified_lp", "cluster_candidates", "evaluate",
    "exact_1d", "exact_2d", "exact_knapsack_3prime", "exact_orderings",
    "fix_variable", "generate_instance", "greedy_baseline_1d",
    "greedy_baseline_2d", "greedy_insertion", "greedy_row_order", "load_instance",
    "load_placement", "pre_filter", "refine_row", "row_width_symmetric",
    "sa_optimize", "save_instance", "save_placement", "solve_1d", "solve_2d",
    "solve_lp", "sp_pack", "succ_rounding", "symmetric_slack",
    "update_profits", "validate_placement",
]
