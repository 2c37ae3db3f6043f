"""Time-layered And-Or graph of an instance and its locality measurements."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ccmdp.model import MdpInstance, Successors, forward_levels


@dataclass(frozen=True)
class LayeredGraph:
    """Reachable structure of an instance unrolled over the horizon.

    ``levels[k]`` lists the states reachable at step ``k`` in instance order.
    ``successors[(k, s, a)]`` holds ``N_a(s_k)`` with probabilities, sorted by
    state order and restricted to positive probabilities.  ``reach[(k, s)]``
    is the set of step-``h`` states reachable from ``s`` at step ``k``.

    ``psi`` counts a state together with every same-level state whose reach
    set meets its own (inclusive count); ``psi_exclusive = psi - 1`` is the
    count that is zero exactly under disjoint transitions.
    """

    horizon: int
    levels: tuple[tuple[str, ...], ...]
    actions: Mapping[tuple[int, str], tuple[str, ...]]
    successors: Mapping[tuple[int, str, str], Successors]
    reach: Mapping[tuple[int, str], frozenset]
    clusters: tuple[tuple[tuple[str, ...], ...], ...]
    gamma: int
    psi: int

    @property
    def psi_exclusive(self) -> int:
        return self.psi - 1

    @property
    def disjoint(self) -> bool:
        return self.psi_exclusive == 0 and self.max_cluster == 1

    @property
    def max_cluster(self) -> int:
        return max(len(c) for lvl in self.clusters for c in lvl)

    def position(self, k: int) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.levels[k])}

    def cluster_index(self, k: int) -> dict[str, int]:
        """Map each state of level ``k`` to the index of its cluster."""
        return {s: ci for ci, members in enumerate(self.clusters[k]) for s in members}


class _DisjointSets:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def build_layers(inst: MdpInstance, allowed=None) -> LayeredGraph:
    """Unroll ``inst`` into reachable levels and measure gamma, psi, clusters.

    ``allowed`` optionally restricts the actions usable at each ``(k, state)``.
    """
    h = inst.horizon
    order = inst.state_index
    levels = forward_levels(inst, allowed)

    actions: dict[tuple[int, str], tuple[str, ...]] = {}
    successors: dict[tuple[int, str, str], Successors] = {}
    gamma = 0
    for k in range(h):
        for s in levels[k]:
            acts = tuple(allowed.get((k, s), ())) if allowed is not None else inst.available(s)
            actions[(k, s)] = acts
            for a in acts:
                succ = tuple(
                    sorted(((t, p) for t, p in inst.transitions[(s, a)] if p > 0),
                           key=lambda tp: order[tp[0]])
                )
                successors[(k, s, a)] = succ
                gamma = max(gamma, len(succ))

    reach: dict[tuple[int, str], frozenset] = {(h, s): frozenset([s]) for s in levels[h]}
    for k in range(h - 1, -1, -1):
        for s in levels[k]:
            acc: set[str] = set()
            for a in actions[(k, s)]:
                for t, _ in successors[(k, s, a)]:
                    acc |= reach[(k + 1, t)]
            reach[(k, s)] = frozenset(acc)

    psi = 1
    clusters = []
    for k, lvl in enumerate(levels):
        ds = _DisjointSets(lvl)
        for i, s in enumerate(lvl):
            overlap = 0
            for j, t in enumerate(lvl):
                if i != j and reach[(k, s)] & reach[(k, t)]:
                    overlap += 1
                    ds.union(s, t)
            psi = max(psi, overlap + 1)
        if k < h:
            # states sharing a one-step successor are coupled even if that
            # successor has an empty reach set
            first_parent: dict[str, str] = {}
            for s in lvl:
                for a in actions[(k, s)]:
                    for t, _ in successors[(k, s, a)]:
                        ds.union(first_parent.setdefault(t, s), s)
        groups: dict[str, list[str]] = {}
        for s in lvl:
            groups.setdefault(ds.find(s), []).append(s)
        clusters.append(tuple(sorted((tuple(g) for g in groups.values()),
                                     key=lambda g: order[g[0]])))

    return LayeredGraph(
        horizon=h,
        levels=tuple(levels),
        actions=actions,
        successors=successors,
        reach=reach,
        clusters=tuple(clusters),
        gamma=gamma,
        psi=psi,
    )
