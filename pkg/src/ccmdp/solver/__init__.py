"""Approximation schemes for constrained finite-horizon MDPs."""

from ccmdp.solver.api import (
    ALGORITHMS,
    Solution,
    policy_discretized_value,
    select_algorithm,
    solve,
    solve_dis,
    solve_lim,
    solve_local,
)
from ccmdp.solver.common import DpTable, GridPlan, discretized_value, fetch_policy, plan_grid

__all__ = [
    "ALGORITHMS",
    "DpTable",
    "GridPlan",
    "Solution",
    "discretized_value",
    "fetch_policy",
    "plan_grid",
    "policy_discretized_value",
    "select_algorithm",
    "solve",
    "solve_dis",
    "solve_lim",
    "solve_local",
]
