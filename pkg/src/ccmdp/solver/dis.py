"""Table fill where each allocation subproblem is a multiple-choice minimum knapsack."""

from __future__ import annotations

import numpy as np

from ccmdp.discretize import round_down_array, round_up_array
from ccmdp.knapsack import MinKnapsackTable
from ccmdp.layers import LayeredGraph
from ccmdp.model import MdpInstance
from ccmdp.solver.common import GridPlan, boundary_risk, finite_prefix, local_risk, parallel_map


class KnapsackTable:
    """Per state and grid level: least risk, action, and the knapsack threshold used.

    For each ``(s_k, a)`` one knapsack table is filled up to the largest
    threshold any grid level needs, then every level reads its cell.
    Allocations are recovered from the stored back-pointers on demand.
    """

    def __init__(self, inst: MdpInstance, g: LayeredGraph, plan: GridPlan, threads: int | None = None):
        self.inst, self.g, self.plan = inst, g, plan
        h = self.horizon = inst.horizon
        self.er: dict[tuple[int, str], np.ndarray] = {}
        self.act: dict[tuple[int, str], np.ndarray] = {}
        self.rho: dict[tuple[int, str], np.ndarray] = {}
        self.tables: dict[tuple[int, str, str], MinKnapsackTable] = {}
        for s in g.levels[h]:
            self.er[(h, s)] = np.array([boundary_risk(inst, s)])
        for k in range(h - 1, -1, -1):
            for s, out in zip(g.levels[k], parallel_map(lambda s: self._row(k, s), g.levels[k], threads)):
                self.er[(k, s)], self.act[(k, s)], self.rho[(k, s)] = out
        self.root_node = inst.initial
        self.root_risk = self.er[(0, inst.initial)]
        self.cells = sum(len(self.er[(k, s)]) for k in range(h) for s in g.levels[k])

    def _row(self, k: int, s: str):
        inst, g, plan = self.inst, self.g, self.plan
        n = plan.rows[(k, s)]
        step, child_step, unit = plan.steps[k], plan.steps[k + 1], plan.rounding(k)
        levels = np.arange(n) * step
        best = np.full(n, np.inf)
        best_a = np.full(n, -1, dtype=np.int64)
        best_rho = np.zeros(n, dtype=np.int64)
        for ai, a in enumerate(g.actions[(k, s)]):
            succ = g.successors[(k, s, a)]
            rows = [self.er[(k + 1, t)] for t, _ in succ]
            sizes = [finite_prefix(r) for r in rows]
            if 0 in sizes:
                continue
            # choices run from the highest reachable level down, so equal-risk ties favour more value
            weights = [p * r[:f][::-1] for (_, p), r, f in zip(succ, rows, sizes)]
            rounded = [round_down_array(p * (np.arange(f)[::-1] * child_step), unit) for (_, p), f in zip(succ, sizes)]
            rho = round_up_array(levels - inst.u(s, a), unit)
            table = MinKnapsackTable(weights, rounded, int(rho.max()))
            self.tables[(k, s, a)] = table
            risk = local_risk(inst, s, a, table.final[rho].copy())
            better = risk < best
            best[better] = risk[better]
            best_a[better] = ai
            best_rho[better] = rho[better]
        return best, best_a, best_rho

    def expand(self, k: int, s: str, index: int):
        a = self.g.actions[(k, s)][int(self.act[(k, s)][index])]
        succ = self.g.successors[(k, s, a)]
        chosen = self.tables[(k, s, a)].backtrack(int(self.rho[(k, s)][index]))
        sizes = [finite_prefix(self.er[(k + 1, t)]) for t, _ in succ]
        return [(s, a)], [(t, f - 1 - j) for (t, _), j, f in zip(succ, chosen, sizes)]
