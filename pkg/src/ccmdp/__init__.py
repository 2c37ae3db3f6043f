"""Approximation schemes and exact oracles for constrained finite-horizon MDPs."""

from ccmdp.discretize import TrimResult, ValueGrid, grid_for_level, round_down, trim_umax
from ccmdp.errors import (
    CcmdpError,
    DemandUnsatisfiable,
    DimensionCapExceeded,
    Infeasible,
    ParseError,
    PolicyError,
    StructureViolation,
    TooLarge,
    ValidationError,
)
from ccmdp.evaluate import evaluate_policy, simulate_risk
from ccmdp.generators import GeneratorParams, generate_gridworld, generate_layered
from ccmdp.io import (
    dump_instance,
    dump_policy,
    load_instance,
    load_policy,
    parse_instance,
    parse_policy,
    serialize_instance,
    serialize_policy,
)
from ccmdp.knapsack import Allocation, KnapsackInstance, exact_mcminks, solve_mcminks, solve_mmcminks
from ccmdp.layers import LayeredGraph, build_layers
from ccmdp.model import EvalReport, MdpInstance, Mode, Policy, set_mode, validate_instance
from ccmdp.oracle import OracleResult, enumerate_optimal, ssp_solve
from ccmdp.solver import Solution, fetch_policy, solve, solve_dis, solve_lim, solve_local

__all__ = [
    "Allocation",
    "CcmdpError",
    "DemandUnsatisfiable",
    "DimensionCapExceeded",
    "EvalReport",
    "GeneratorParams",
    "Infeasible",
    "KnapsackInstance",
    "LayeredGraph",
    "MdpInstance",
    "Mode",
    "OracleResult",
    "ParseError",
    "Policy",
    "PolicyError",
    "Solution",
    "StructureViolation",
    "TooLarge",
    "TrimResult",
    "ValidationError",
    "ValueGrid",
    "build_layers",
    "dump_instance",
    "dump_policy",
    "enumerate_optimal",
    "evaluate_policy",
    "exact_mcminks",
    "fetch_policy",
    "generate_gridworld",
    "generate_layered",
    "grid_for_level",
    "load_instance",
    "load_policy",
    "parse_instance",
    "parse_policy",
    "round_down",
    "serialize_instance",
    "serialize_policy",
    "set_mode",
    "simulate_risk",
    "solve",
    "solve_dis",
    "solve_lim",
    "solve_local",
    "solve_mcminks",
    "solve_mmcminks",
    "ssp_solve",
    "trim_umax",
    "validate_instance",
]
