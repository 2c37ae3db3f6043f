"""Table fill by exhaustive enumeration of successor grid allocations."""

from __future__ import annotations

import numpy as np

from ccmdp.discretize import floor_index
from ccmdp.layers import LayeredGraph
from ccmdp.model import MdpInstance
from ccmdp.solver.common import GridPlan, boundary_risk, finite_prefix, local_risk, parallel_map


class EnumerationTable:
    """Per state and grid level: least risk, action and flat allocation index.

    Each ``(s_k, a)`` enumerates every allocation of reachable grid levels to
    its successors, buckets allocations by their floored value, and keeps the
    cheapest per bucket; a suffix minimum then gives "value at least l".
    """

    def __init__(self, inst: MdpInstance, g: LayeredGraph, plan: GridPlan, threads: int | None = None):
        self.inst, self.g, self.plan = inst, g, plan
        h = self.horizon = inst.horizon
        self.er: dict[tuple[int, str], np.ndarray] = {}
        self.act: dict[tuple[int, str], np.ndarray] = {}
        self.alloc: dict[tuple[int, str], np.ndarray] = {}
        self.shapes: dict[tuple[int, str, str], tuple[int, ...]] = {}
        for s in g.levels[h]:
            self.er[(h, s)] = np.array([boundary_risk(inst, s)])
        for k in range(h - 1, -1, -1):
            for s, out in zip(g.levels[k], parallel_map(lambda s: self._row(k, s), g.levels[k], threads)):
                self.er[(k, s)], self.act[(k, s)], self.alloc[(k, s)] = out
        self.root_node = inst.initial
        self.root_risk = self.er[(0, inst.initial)]
        self.cells = sum(len(self.er[(k, s)]) for k in range(h) for s in g.levels[k])

    def _row(self, k: int, s: str):
        inst, g, plan = self.inst, self.g, self.plan
        n = plan.rows[(k, s)]
        step, child_step = plan.steps[k], plan.steps[k + 1]
        best = np.full(n, np.inf)
        best_a = np.full(n, -1, dtype=np.int64)
        best_f = np.full(n, -1, dtype=np.int64)
        for ai, a in enumerate(g.actions[(k, s)]):
            succ = g.successors[(k, s, a)]
            rows = [self.er[(k + 1, t)] for t, _ in succ]
            shape = tuple(finite_prefix(r) for r in rows)
            self.shapes[(k, s, a)] = shape
            if 0 in shape:
                continue
            m = len(shape)
            acc_v = np.zeros(shape)
            acc_r = np.zeros(shape)
            for i, ((_, p), r, f) in enumerate(zip(succ, rows, shape)):
                expand = [1] * m
                expand[i] = f
                acc_v = acc_v + (p * (np.arange(f) * child_step)).reshape(expand)
                acc_r = acc_r + (p * r[:f]).reshape(expand)
            vbar = floor_index((acc_v + inst.u(s, a)) / step).reshape(-1)
            bucket = np.minimum(vbar, n - 1)
            risk = np.asarray(local_risk(inst, s, a, acc_r.reshape(-1)), dtype=float)
            order = np.lexsort((risk, bucket))
            b_sorted = bucket[order]
            first = np.ones(order.size, dtype=bool)
            first[1:] = b_sorted[1:] != b_sorted[:-1]
            lead = order[first]
            b = bucket[lead]
            better = risk[lead] < best[b]
            best[b[better]] = risk[lead][better]
            best_a[b[better]] = ai
            best_f[b[better]] = lead[better]
        # suffix minimum by (risk, action, allocation)
        er = np.full(n, np.inf)
        act = np.full(n, -1, dtype=np.int64)
        alloc = np.full(n, -1, dtype=np.int64)
        cur = (np.inf, -1, -1)
        for b in range(n - 1, -1, -1):
            if best_a[b] >= 0:
                cand = (best[b], int(best_a[b]), int(best_f[b]))
                if cur[1] < 0 or cand < cur:
                    cur = cand
            er[b], act[b], alloc[b] = cur
        return er, act, alloc

    def expand(self, k: int, s: str, index: int):
        a = self.g.actions[(k, s)][int(self.act[(k, s)][index])]
        succ = self.g.successors[(k, s, a)]
        shape = self.shapes[(k, s, a)]
        idx = np.unravel_index(int(self.alloc[(k, s)][index]), shape) if shape else ()
        return [(s, a)], [(t, int(j)) for (t, _), j in zip(succ, idx)]
