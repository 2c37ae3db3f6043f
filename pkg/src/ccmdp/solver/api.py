"""Solver entry points: structure checks, algorithm selection and grid refinement."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ccmdp.discretize import check_eps, trim_umax
from ccmdp.errors import StructureViolation, ValidationError
from ccmdp.evaluate import default_threads, evaluate_policy
from ccmdp.layers import LayeredGraph, build_layers
from ccmdp.model import EvalReport, MdpInstance, Policy, validate_instance
from ccmdp.solver.common import discretized_value, fetch_policy, plan_grid
from ccmdp.solver.dis import KnapsackTable
from ccmdp.solver.lim import EnumerationTable
from ccmdp.solver.local import PSI_MAX, ClusterTable, check_clusters

GAMMA_CAP = 3
ALGORITHMS = ("auto", "lim", "dis", "local")
SCHEME = {"lim": "one-part", "dis": "three-part", "local": "three-part"}


@dataclass(frozen=True)
class Solution:
    """A returned policy with its exact evaluation and run diagnostics.

    Unpacks as ``policy, report``.  ``discretized_value`` is the grid value
    of the chosen root cell, a lower bound on ``report.value``.  ``certified``
    records whether the grid step was derived from a value known not to
    exceed the optimum, which is what the ``1 - eps`` bound relies on.
    """

    policy: Policy
    report: EvalReport
    algorithm: str
    eps: float
    discretized_value: float
    steps: tuple[float, ...]
    u_max: float
    u_scale: float
    value_floor: float
    certified: bool
    cells: int
    runs: int
    gamma: int
    psi: int
    max_cluster: int
    seconds: float = field(default=0.0, compare=False)

    def __iter__(self):
        return iter((self.policy, self.report))


def select_algorithm(g: LayeredGraph, gamma_cap: int = GAMMA_CAP, psi_max: int = PSI_MAX) -> str:
    """Weakest-assumption solver whose preconditions the measured structure meets."""
    if g.disjoint:
        return "lim" if g.gamma <= gamma_cap else "dis"
    if g.max_cluster <= psi_max:
        return "local"
    raise StructureViolation(
        f"cluster too large: largest cluster has {g.max_cluster} states, cap is {psi_max}"
    )


def check_structure(g: LayeredGraph, algorithm: str, gamma_cap: int, psi_max: int) -> None:
    if algorithm in ("lim", "dis") and not g.disjoint:
        raise StructureViolation(
            f"structure violation: {algorithm} needs disjoint transitions, measured psi={g.psi} "
            f"and largest cluster {g.max_cluster}"
        )
    if algorithm == "lim" and g.gamma > gamma_cap:
        raise StructureViolation(f"structure violation: gamma={g.gamma} exceeds the enumeration cap {gamma_cap}")
    if algorithm == "local":
        check_clusters(g, psi_max)


def solve(
    inst: MdpInstance,
    eps: float = 0.1,
    algorithm: str = "auto",
    trim: bool = True,
    refine: bool = True,
    gamma_cap: int = GAMMA_CAP,
    psi_max: int = PSI_MAX,
    threads: int | None = None,
) -> Solution:
    """Approximately optimal feasible policy for a C-MDP or CC-MDP.

    Structure is measured on the input graph; ``auto`` picks ``lim`` for
    disjoint graphs with small branching, ``dis`` for other disjoint graphs
    and ``local`` otherwise.  When the utility bound used for the grid is not
    known to be below the optimum, the solve is repeated once with the grid
    scaled to the value of a feasible policy already found.
    """
    start = time.perf_counter()
    check_eps(eps)
    if algorithm not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    validate_instance(inst)
    threads = default_threads() if threads is None else threads
    g0 = build_layers(inst)
    if algorithm == "auto":
        algorithm = select_algorithm(g0, gamma_cap, psi_max)
    check_structure(g0, algorithm, gamma_cap, psi_max)

    if trim:
        tr = trim_umax(inst, g0)
        g = build_layers(inst, tr.allowed)
        u_max, floor = tr.u_max, tr.value_floor
    else:
        g = g0
        u_max = max((inst.u(s, a) for (k, s), acts in g.actions.items() for a in acts), default=0.0)
        floor = 0.0

    def run(u_scale: float):
        plan = plan_grid(inst, g, eps, SCHEME[algorithm], u_max, u_scale)
        if algorithm == "lim":
            table = EnumerationTable(inst, g, plan, threads)
        elif algorithm == "dis":
            table = KnapsackTable(inst, g, plan, threads)
        else:
            table = ClusterTable(inst, g, plan, threads, psi_max)
        policy, root = fetch_policy(table, inst.budget)
        report = evaluate_policy(inst, g0, policy)
        return policy, report, root * plan.steps[0], plan, table.cells

    u_scale = u_max
    best = run(u_scale)
    runs = 1
    known = max(floor, best[1].value)
    if refine and u_scale > known > 0:
        u_scale = known
        second = run(u_scale)
        runs = 2
        if second[1].value >= best[1].value:
            best = second
        known = max(known, best[1].value)
    policy, report, vbar, plan, cells = best
    return Solution(
        policy=policy,
        report=report,
        algorithm=algorithm,
        eps=eps,
        discretized_value=vbar,
        steps=plan.steps,
        u_max=u_max,
        u_scale=plan.u_scale,
        value_floor=floor,
        certified=u_max == 0 or u_scale <= known,
        cells=cells,
        runs=runs,
        gamma=g0.gamma,
        psi=g0.psi,
        max_cluster=g0.max_cluster,
        seconds=time.perf_counter() - start,
    )


def solve_lim(inst: MdpInstance, eps: float = 0.1, **kw) -> Solution:
    return solve(inst, eps, algorithm="lim", **kw)


def solve_dis(inst: MdpInstance, eps: float = 0.1, **kw) -> Solution:
    return solve(inst, eps, algorithm="dis", **kw)


def solve_local(inst: MdpInstance, eps: float = 0.1, **kw) -> Solution:
    return solve(inst, eps, algorithm="local", **kw)


def policy_discretized_value(inst: MdpInstance, pi: Policy, steps) -> float:
    """Floor-rounded value of an arbitrary policy on a solution's grid steps."""
    return discretized_value(inst, build_layers(inst), pi, steps)
