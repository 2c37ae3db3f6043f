"""Joint table fill over clusters of states with overlapping futures.

A table node is a cluster together with the subset of its members that a
parent actually reaches (its active members).  Each node cell is a joint
grid level per active member; the allocation subproblem for a joint action
is a vector-valued minimum knapsack whose categories are the child nodes and
whose choices are the child's joint cells.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from ccmdp.discretize import round_down_array, round_up_array
from ccmdp.errors import StructureViolation
from ccmdp.knapsack import MultiKnapsackTable
from ccmdp.layers import LayeredGraph
from ccmdp.model import MdpInstance
from ccmdp.solver.common import GridPlan, boundary_risk, local_risk, parallel_map

PSI_MAX = 3


def check_clusters(g: LayeredGraph, psi_max: int) -> None:
    for k, lvl in enumerate(g.clusters):
        for members in lvl:
            if len(members) > psi_max:
                raise StructureViolation(
                    f"cluster too large: {len(members)} states {list(members)} at step {k} exceed the cap of {psi_max}"
                )


class _Entry:
    """Filled cells of one node: per-member risk, summed risk, and back-pointers."""

    __slots__ = ("shape", "member", "total", "act", "rho", "choices")

    def __init__(self, shape, member, total, act=None, rho=None):
        self.shape = shape
        self.member = member  # (d, size)
        self.total = total  # (size,)
        self.act = act
        self.rho = rho  # (d, size)
        # highest joint levels first, so equal-risk ties favour more value
        self.choices = np.nonzero(np.isfinite(total))[0][::-1]


class ClusterTable:
    def __init__(
        self,
        inst: MdpInstance,
        g: LayeredGraph,
        plan: GridPlan,
        threads: int | None = None,
        psi_max: int = PSI_MAX,
    ):
        check_clusters(g, psi_max)
        self.inst, self.g, self.plan = inst, g, plan
        h = self.horizon = inst.horizon
        self.where = [g.cluster_index(k) for k in range(h + 1)]
        self.root_node = (self.where[0][inst.initial], (inst.initial,))

        # top-down: which nodes occur, and each joint action's child nodes
        self.children: dict[tuple[int, tuple, int], list[tuple[int, tuple[str, ...]]]] = {}
        nodes = [[self.root_node]]
        for k in range(h):
            seen: dict = {}
            for node in nodes[k]:
                for ai, avec in enumerate(self.joint_actions(k, node)):
                    kids = self._child_nodes(k, node, avec)
                    self.children[(k, node, ai)] = kids
                    for kid in kids:
                        seen.setdefault(kid, None)
            nodes.append(sorted(seen, key=lambda n: (n[0], [g.clusters[k + 1][n[0]].index(s) for s in n[1]])))
        self.nodes = nodes

        self.entries: dict[tuple[int, tuple], _Entry] = {}
        self.tables: dict[tuple[int, tuple, int], MultiKnapsackTable] = {}
        for node in nodes[h]:
            (s,) = node[1]
            self.entries[(h, node)] = _Entry((1,), np.array([[boundary_risk(inst, s)]]), np.array([boundary_risk(inst, s)]))
        for k in range(h - 1, -1, -1):
            for node, entry in zip(nodes[k], parallel_map(lambda n: self._fill(k, n), nodes[k], threads)):
                self.entries[(k, node)] = entry
        self.root_risk = self.entries[(0, self.root_node)].total
        self.cells = sum(e.total.size for (k, _), e in self.entries.items() if k < h)

    def joint_actions(self, k: int, node) -> list[tuple[str, ...]]:
        return list(product(*(self.g.actions[(k, s)] for s in node[1])))

    def _child_nodes(self, k: int, node, avec) -> list[tuple[int, tuple[str, ...]]]:
        touched: set[str] = set()
        for s, a in zip(node[1], avec):
            touched.update(t for t, _ in self.g.successors[(k, s, a)])
        kids = []
        for ci, members in enumerate(self.g.clusters[k + 1]):
            active = tuple(t for t in members if t in touched)
            if active:
                kids.append((ci, active))
        return kids

    def _fill(self, k: int, node) -> _Entry:
        inst, g, plan = self.inst, self.g, self.plan
        members = node[1]
        d = len(members)
        shape = tuple(plan.rows[(k, s)] for s in members)
        size = int(np.prod(shape))
        step, child_step, unit = plan.steps[k], plan.steps[k + 1], plan.rounding(k)
        best_total = np.full(size, np.inf)
        best_member = np.full((d, size), np.inf)
        best_act = np.full(size, -1, dtype=np.int64)
        best_rho = np.zeros((d, size), dtype=np.int64)
        for ai, avec in enumerate(self.joint_actions(k, node)):
            trans = [dict(g.successors[(k, s, a)]) for s, a in zip(members, avec)]
            weights, rounded, partials = [], [], []
            usable = True
            for ci, active in self.children[(k, node, ai)]:
                child = self.entries[(k + 1, (ci, active))]
                if child.choices.size == 0:
                    usable = False
                    break
                levels = np.unravel_index(child.choices, child.shape)
                risks = child.member[:, child.choices]
                w = np.zeros(child.choices.size)
                part = np.zeros((child.choices.size, d))
                vals = np.zeros((child.choices.size, d))
                for m, t in enumerate(active):
                    coef = 0.0
                    for tc in trans:
                        coef += tc.get(t, 0.0)
                    w = w + coef * risks[m]
                    for c, tc in enumerate(trans):
                        p = tc.get(t, 0.0)
                        if p > 0:
                            part[:, c] = part[:, c] + p * risks[m]
                            vals[:, c] = vals[:, c] + p * (levels[m] * child_step)
                weights.append(w)
                partials.append(part)
                rounded.append(round_down_array(vals, unit))
            if not usable:
                continue
            rho = [round_up_array(np.arange(n) * step - inst.u(s, a), unit) for n, s, a in zip(shape, members, avec)]
            table = MultiKnapsackTable(weights, rounded, [int(r.max()) for r in rho], partials, d)
            self.tables[(k, node, ai)] = table
            cell = np.ravel_multi_index(np.ix_(*rho), table.shape).reshape(-1)
            acc = table.final_partials[:, cell]
            reachable = np.isfinite(table.final[cell])
            member = np.empty((d, size))
            total = np.zeros(size)
            for c, (s, a) in enumerate(zip(members, avec)):
                part_c = np.where(reachable, acc[c], np.inf)
                member[c] = local_risk(inst, s, a, part_c)
                total = total + member[c]
            better = total < best_total
            best_total[better] = total[better]
            best_member[:, better] = member[:, better]
            best_act[better] = ai
            grids = np.meshgrid(*rho, indexing="ij")
            for c in range(d):
                best_rho[c, better] = grids[c].reshape(-1)[better]
        return _Entry(shape, best_member, best_total, best_act, best_rho)

    def expand(self, k: int, node, index: int):
        entry = self.entries[(k, node)]
        ai = int(entry.act[index])
        avec = self.joint_actions(k, node)[ai]
        chosen = self.tables[(k, node, ai)].backtrack(entry.rho[:, index])
        kids = []
        for (ci, active), j in zip(self.children[(k, node, ai)], chosen):
            child = self.entries[(k + 1, (ci, active))]
            kids.append(((ci, active), int(child.choices[j])))
        return list(zip(node[1], avec)), kids
