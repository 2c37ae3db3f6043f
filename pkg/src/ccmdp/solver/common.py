"""Grid planning, the DP-table protocol, and policy extraction shared by all solvers."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Protocol, Sequence

import numpy as np

from ccmdp.discretize import floor_index, level_step
from ccmdp.errors import Infeasible, PolicyError
from ccmdp.layers import LayeredGraph
from ccmdp.model import FEAS_TOL, MdpInstance, Mode, Policy


@dataclass(frozen=True)
class GridPlan:
    """Per-step grid spacing and per-state row lengths for one solver run.

    ``steps[k]`` is ``L_k`` for ``k < h``; ``steps[h]`` is a placeholder since
    the last level only holds value 0.  ``rows[(k, s)]`` is the number of grid
    levels kept for state ``s``: the global range capped at the state's best
    unconstrained value, above which every cell is unreachable anyway.
    """

    steps: tuple[float, ...]
    rows: dict
    scheme: str
    eps: float
    u_max: float
    u_scale: float
    gamma: int

    def rounding(self, k: int) -> float:
        return self.steps[k] / max(self.gamma, 1)


def max_values(inst: MdpInstance, g: LayeredGraph) -> dict[tuple[int, str], float]:
    """Unconstrained optimal value of every reachable ``(k, state)`` by backward induction."""
    h = inst.horizon
    v = {(h, s): 0.0 for s in g.levels[h]}
    for k in range(h - 1, -1, -1):
        for s in g.levels[k]:
            best = -math.inf
            for a in g.actions[(k, s)]:
                acc = 0.0
                for t, p in g.successors[(k, s, a)]:
                    acc += p * v[(k + 1, t)]
                best = max(best, acc + inst.u(s, a))
            v[(k, s)] = best
    return v


def plan_grid(
    inst: MdpInstance,
    g: LayeredGraph,
    eps: float,
    scheme: str,
    u_max: float,
    u_scale: float,
) -> GridPlan:
    """Grid steps from ``u_scale`` and ranges from ``u_max*(h-k)``, capped per state."""
    h = inst.horizon
    vmax = max_values(inst, g)
    steps = []
    rows: dict[tuple[int, str], int] = {}
    for k in range(h):
        step = level_step(k, h, eps, u_scale, scheme) if u_scale > 0 else 1.0
        steps.append(step)
        full = int(floor_index(u_max * (h - k) / step)) + 1
        for s in g.levels[k]:
            rows[(k, s)] = max(1, min(full, int(floor_index(vmax[(k, s)] / step)) + 1))
    steps.append(1.0)
    for s in g.levels[h]:
        rows[(h, s)] = 1
    return GridPlan(tuple(steps), rows, scheme, eps, u_max, u_scale, g.gamma)


def local_risk(inst: MdpInstance, s: str, a: str, acc):
    """Combine a successor aggregate with the state's own risk or cost term.

    Unreachable (infinite) aggregates stay unreachable even when ``r = 1``.
    """
    if inst.mode is Mode.CHANCE:
        r = inst.r(s)
        with np.errstate(invalid="ignore"):
            out = r + (1.0 - r) * acc
    else:
        out = inst.c(s, a) + acc
    if isinstance(out, np.ndarray):
        out[~np.isfinite(acc)] = np.inf
    elif not np.isfinite(acc):
        out = np.inf
    return out


def boundary_risk(inst: MdpInstance, s: str) -> float:
    return inst.r(s) if inst.mode is Mode.CHANCE else 0.0


def finite_prefix(row: np.ndarray) -> int:
    """Number of reachable cells; rows are monotone so these form a prefix."""
    return int(np.isfinite(row).sum())


def parallel_map(fn: Callable, items: Sequence, threads: int | None) -> list:
    if not threads or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


class DpTable(Protocol):
    """What policy extraction needs from a filled table."""

    horizon: int
    root_node: Hashable
    root_risk: np.ndarray
    cells: int

    def expand(self, k: int, node: Hashable, index: int) -> tuple[
        Iterable[tuple[str, str]], Iterable[tuple[Hashable, int]]
    ]:
        """Actions assigned at ``node`` for cell ``index`` and the successor cells demanded."""


def fetch_policy(table: DpTable, budget: float) -> tuple[Policy, int]:
    """Backtrack from the largest root cell within budget.

    Returns the policy on every state reached along the recorded allocations
    and the chosen root grid index.
    """
    ok = np.nonzero(table.root_risk <= budget + FEAS_TOL)[0]
    if ok.size == 0:
        raise Infeasible(
            f"infeasible: minimum table risk {float(np.min(table.root_risk)):.6g} exceeds budget {budget:.6g}"
        )
    root = int(ok[-1])
    assignment: dict[tuple[str, int], str] = {}
    frontier = {table.root_node: root}
    for k in range(table.horizon):
        nxt: dict = {}
        for node, index in frontier.items():
            acts, kids = table.expand(k, node, index)
            for s, a in acts:
                if assignment.setdefault((s, k), a) != a:
                    raise PolicyError(f"conflicting actions for state {s!r} at step {k}")
            for child, ci in kids:
                if nxt.setdefault(child, ci) != ci:
                    raise PolicyError(f"conflicting demands for {child!r} at step {k + 1}")
        frontier = nxt
    return Policy(assignment), root


def discretized_value(inst: MdpInstance, g: LayeredGraph, pi: Policy, steps: Sequence[float]) -> float:
    """Floor-rounded value recursion of ``pi`` on the given grid steps."""
    h = inst.horizon
    vbar: dict[str, float] = {}
    order = inst.state_index
    levels = [[inst.initial]]
    for k in range(h):
        nxt = set()
        for s in levels[-1]:
            nxt.update(t for t, _ in g.successors[(k, s, pi(s, k))])
        levels.append(sorted(nxt, key=order.__getitem__))
    vbar = {s: 0.0 for s in levels[h]}
    for k in range(h - 1, -1, -1):
        nv = {}
        for s in levels[k]:
            a = pi(s, k)
            acc = 0.0
            for t, p in g.successors[(k, s, a)]:
                acc += p * vbar[t]
            nv[s] = int(floor_index((acc + inst.u(s, a)) / steps[k])) * steps[k]
        vbar = nv
    return vbar[inst.initial]
