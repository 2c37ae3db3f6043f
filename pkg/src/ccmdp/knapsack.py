"""Multiple-choice minimum knapsack: rounding DP, its vector-valued form, and brute force.

Tables store ``TB(i, rho)``: the least total weight of one choice from each of
the first ``i`` categories whose rounded values sum to at least ``rho`` (in
units of the rounding factor).  Unreachable cells hold ``inf``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ccmdp.discretize import round_down_array, round_up_array
from ccmdp.errors import DemandUnsatisfiable, DimensionCapExceeded, TooLarge, ValidationError

UNREACHABLE = np.inf
"""Marker for table cells no allocation reaches."""

DIM_CAP = 3
EXACT_GUARD = 10**6


@dataclass(frozen=True)
class KnapsackInstance:
    """Categories of choices with weights, scalar or vector values, and demand(s).

    ``values[i]`` has shape ``(m_i,)`` for a scalar instance or ``(m_i, d)``
    for a ``d``-dimensional one; ``demand`` is a float or a length-``d`` tuple.
    """

    weights: tuple
    values: tuple
    demand: "float | tuple[float, ...]"
    rounding: float = 1.0

    def __post_init__(self):
        w = tuple(np.asarray(x, dtype=float).reshape(-1) for x in self.weights)
        v = tuple(np.asarray(x, dtype=float) for x in self.values)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", v)
        if len(w) != len(v):
            raise ValidationError("weights and values disagree on the number of categories")
        for i, (wi, vi) in enumerate(zip(w, v)):
            if wi.size == 0:
                raise ValidationError(f"category {i} has no choices")
            if vi.shape[0] != wi.size:
                raise ValidationError(f"category {i}: {wi.size} weights but {vi.shape[0]} values")
            if (wi < 0).any() or (vi < 0).any():
                raise ValidationError(f"category {i} has negative weight or value")
        if not self.rounding > 0:
            raise ValidationError("rounding factor must be positive")
        if self.vector:
            d = len(self.demand)
            if any(vi.ndim != 2 or vi.shape[1] != d for vi in v):
                raise ValidationError(f"vector values must all have dimension {d}")
        elif any(vi.ndim != 1 for vi in v):
            raise ValidationError("scalar demand requires scalar values")

    @property
    def vector(self) -> bool:
        return isinstance(self.demand, (tuple, list, np.ndarray))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return len(self.demand) if self.vector else 1


@dataclass(frozen=True)
class Allocation:
    """One choice index per category with its totals.

    ``rho`` is the rounded-value threshold met, in units of the rounding
    factor (a tuple for vector instances).
    """

    chosen: tuple[int, ...]
    total_weight: float
    rho: "int | tuple[int, ...]"
    total_value: "float | tuple[float, ...]"


# --------------------------------------------------------------------------
# tables


def _frontier(weights: np.ndarray, keys: np.ndarray, tops: Sequence[int]) -> np.ndarray:
    """Indices of choices that can win some cell, in ascending order.

    Rounded values are capped at the table top, where the clamp saturates.
    A choice is dropped when another one is no heavier, has values at least
    as large in every dimension, and either is strictly lighter or comes
    first: under the strict ``<`` comparison in index order the dropped
    choice never changes a cell, so the table is unchanged.
    """
    keys = np.minimum(keys.reshape(len(weights), -1), np.asarray(tops, dtype=np.int64))
    covered = np.zeros(tuple(int(t) + 1 for t in tops), dtype=bool)
    keep = []
    for j in np.lexsort((np.arange(len(weights)), weights)):
        v = keys[j]
        if covered[tuple(v)]:
            continue
        keep.append(j)
        covered[tuple(slice(0, int(x) + 1) for x in v)] = True
    return np.sort(np.array(keep, dtype=np.int64))


class MinKnapsackTable:
    """Scalar rounding DP over thresholds ``0..top`` with argmin back-pointers."""

    def __init__(self, weights: Sequence[np.ndarray], rounded: Sequence[np.ndarray], top: int):
        self.rounded = [np.asarray(r, dtype=np.int64) for r in rounded]
        self.top = int(top)
        grid = np.arange(self.top + 1)
        prev = np.full(self.top + 1, UNREACHABLE)
        prev[0] = 0.0
        self.alc: list[np.ndarray] = []
        for w, vb in zip(weights, self.rounded):
            cur = np.full(self.top + 1, UNREACHABLE)
            arg = np.full(self.top + 1, -1, dtype=np.int64)
            for j in _frontier(w, vb, (self.top,)):
                cand = prev[np.maximum(grid - vb[j], 0)] + w[j]
                better = cand < cur
                cur[better] = cand[better]
                arg[better] = j
            self.alc.append(arg)
            prev = cur
        self.final = prev

    def weight(self, rho) -> "float | np.ndarray":
        return self.final[rho]

    def backtrack(self, rho: int) -> tuple[int, ...]:
        chosen = []
        for arg, vb in zip(reversed(self.alc), reversed(self.rounded)):
            j = int(arg[rho])
            chosen.append(j)
            rho = max(rho - int(vb[j]), 0)
        return tuple(reversed(chosen))


class MultiKnapsackTable:
    """Vector rounding DP on a flat row-major grid over ``(rho^1, ..., rho^d)``.

    ``partials`` optionally attaches per-choice vectors that are summed along
    the selected allocation, alongside the weight.
    """

    def __init__(
        self,
        weights: Sequence[np.ndarray],
        rounded: Sequence[np.ndarray],
        tops: Sequence[int],
        partials: Sequence[np.ndarray] | None = None,
        partial_dim: int = 0,
    ):
        self.rounded = [np.asarray(r, dtype=np.int64).reshape(len(w), -1) for w, r in zip(weights, rounded)]
        self.shape = tuple(int(t) + 1 for t in tops)
        size = int(np.prod(self.shape))
        axes = [np.arange(n) for n in self.shape]
        prev = np.full(size, UNREACHABLE)
        prev[0] = 0.0
        track = partials is not None
        if track:
            prev_p = np.zeros((partial_dim, size))
        self.alc: list[np.ndarray] = []
        for i, (w, vb) in enumerate(zip(weights, self.rounded)):
            cur = np.full(size, UNREACHABLE)
            arg = np.full(size, -1, dtype=np.int64)
            if track:
                part = np.asarray(partials[i], dtype=float).reshape(len(w), -1)
                cur_p = np.zeros_like(prev_p)
            for j in _frontier(w, vb, tops):
                src = np.ravel_multi_index(
                    np.ix_(*[np.maximum(ax - vb[j, c], 0) for c, ax in enumerate(axes)]), self.shape
                ).reshape(-1)
                cand = prev[src] + w[j]
                better = cand < cur
                cur[better] = cand[better]
                arg[better] = j
                if track:
                    cur_p[:, better] = prev_p[:, src[better]] + part[j][:, None]
            self.alc.append(arg)
            prev = cur
            if track:
                prev_p = cur_p
        self.final = prev
        self.final_partials = prev_p if track else None

    def flat(self, rho) -> "int | np.ndarray":
        return np.ravel_multi_index(tuple(rho), self.shape)

    def weight(self, rho) -> "float | np.ndarray":
        return self.final[self.flat(rho)]

    def backtrack(self, rho: Sequence[int]) -> tuple[int, ...]:
        rho = np.array(rho, dtype=np.int64)
        chosen = []
        for arg, vb in zip(reversed(self.alc), reversed(self.rounded)):
            j = int(arg[self.flat(rho)])
            chosen.append(j)
            rho = np.maximum(rho - vb[j], 0)
        return tuple(reversed(chosen))


# --------------------------------------------------------------------------
# solvers


def _threshold(demand: float, rounding: float) -> int:
    """Smallest rounded-grid point at or above the demand, clamped at 0."""
    return int(round_up_array(np.array([demand]), rounding)[0])


def _true_value(inst: KnapsackInstance, chosen: Sequence[int]):
    if inst.vector:
        total = np.zeros(inst.dim)
        for vi, j in zip(inst.values, chosen):
            total = total + vi[j]
        return tuple(float(x) for x in total)
    total = 0.0
    for vi, j in zip(inst.values, chosen):
        total += float(vi[j])
    return total


def solve_mcminks(inst: KnapsackInstance) -> Allocation:
    """Rounding DP for scalar multiple-choice minimum knapsack.

    Values are floored to multiples of the rounding factor, the table is
    filled up to the smallest grid point at or above the demand, and the
    allocation is recovered from the back-pointers.
    """
    if inst.vector:
        raise ValidationError("solve_mcminks expects a scalar instance")
    rounded = [round_down_array(v, inst.rounding) for v in inst.values]
    rho = _threshold(inst.demand, inst.rounding)
    table = MinKnapsackTable(inst.weights, rounded, rho)
    weight = float(table.weight(rho))
    if weight == UNREACHABLE:
        raise DemandUnsatisfiable(f"demand {inst.demand} unsatisfiable: no allocation reaches rounded value {rho}")
    chosen = table.backtrack(rho)
    return Allocation(chosen, weight, rho, _true_value(inst, chosen))


def solve_mmcminks(inst: KnapsackInstance, cap: int = DIM_CAP) -> Allocation:
    """Vector-valued analogue of :func:`solve_mcminks` with per-dimension demands."""
    if not inst.vector:
        inst = KnapsackInstance(inst.weights, tuple(v.reshape(-1, 1) for v in inst.values), (inst.demand,), inst.rounding)
    if inst.dim > cap:
        raise DimensionCapExceeded(f"{inst.dim} value dimensions exceed the cap of {cap}")
    rounded = [round_down_array(v, inst.rounding) for v in inst.values]
    rho = tuple(_threshold(d, inst.rounding) for d in inst.demand)
    for c in range(inst.dim):
        best = sum(int(r[:, c].max()) for r in rounded)
        if best < rho[c]:
            raise DemandUnsatisfiable(
                f"demand unsatisfiable in dimension {c}: need rounded value {rho[c]}, at most {best} available"
            )
    table = MultiKnapsackTable(inst.weights, rounded, rho)
    weight = float(table.weight(rho))
    if weight == UNREACHABLE:
        raise DemandUnsatisfiable(f"demand {tuple(inst.demand)} unsatisfiable jointly")
    chosen = table.backtrack(rho)
    return Allocation(chosen, weight, rho, _true_value(inst, chosen))


def exact_mcminks(inst: KnapsackInstance, guard: int = EXACT_GUARD) -> Allocation:
    """Exhaustive minimum-weight allocation meeting the true (unrounded) demand.

    Allocations are scanned in lexicographic order of choice indices; the
    first minimum-weight feasible one is returned.
    """
    sizes = [w.size for w in inst.weights]
    total = int(np.prod(sizes, dtype=object))
    if total > guard:
        raise TooLarge(f"{total} allocations exceed the enumeration guard of {guard}")
    demand = np.atleast_1d(np.asarray(inst.demand, dtype=float))
    digits = np.indices(sizes).reshape(len(sizes), -1) if sizes else np.zeros((0, 1), dtype=np.int64)
    weight = np.zeros(digits.shape[1])
    value = np.zeros((digits.shape[1], inst.dim))
    for wi, vi, col in zip(inst.weights, inst.values, digits):
        weight = weight + wi[col]
        value = value + vi[col].reshape(len(col), -1)
    feasible = (value >= demand).all(axis=1)
    if not feasible.any():
        raise DemandUnsatisfiable(f"demand {inst.demand} exceeds every allocation's value")
    pick = int(np.argmin(np.where(feasible, weight, UNREACHABLE)))
    best = tuple(int(x) for x in digits[:, pick])
    best_w = float(weight[pick])
    rho = (
        tuple(_threshold(d, inst.rounding) for d in inst.demand)
        if inst.vector
        else _threshold(inst.demand, inst.rounding)
    )
    return Allocation(best, best_w, rho, _true_value(inst, best))
