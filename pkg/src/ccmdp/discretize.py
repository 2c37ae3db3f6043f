"""Utility grids, floor rounding on grid indices, and utility-bound trimming."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ccmdp.errors import Infeasible, ValidationError
from ccmdp.layers import LayeredGraph, build_layers
from ccmdp.evaluate import evaluate_policy
from ccmdp.model import MdpInstance, Mode, Policy

FLOOR_GUARD = 1e-12
"""Relative slack that keeps analytically exact multiples from slipping a cell."""

SCHEMES = ("one-part", "three-part")


def floor_index(q):
    """``floor(q)`` that treats ``q`` within the relative guard below an integer as that integer."""
    q = np.asarray(q, dtype=float)
    return np.floor(q + FLOOR_GUARD * np.maximum(1.0, np.abs(q))).astype(np.int64)


def ceil_index(q):
    """``ceil(q)`` with the same guard, so values a hair above an integer stay on it."""
    q = np.asarray(q, dtype=float)
    return np.ceil(q - FLOOR_GUARD * np.maximum(1.0, np.abs(q))).astype(np.int64)


@dataclass(frozen=True)
class ValueGrid:
    """Uniform grid ``{0, step, ..., (count-1)*step}`` addressed by integer index."""

    step: float
    count: int

    def __post_init__(self):
        if not self.step > 0:
            raise ValidationError(f"grid step must be positive, got {self.step}")
        if self.count < 1:
            raise ValidationError("grid must contain at least the zero level")

    @property
    def top(self) -> int:
        return self.count - 1

    def value(self, index: int) -> float:
        return index * self.step

    def values(self) -> np.ndarray:
        return np.arange(self.count) * self.step


def check_eps(eps: float) -> float:
    if not (0.0 < eps < 1.0):
        raise ValidationError(f"eps must lie strictly between 0 and 1, got {eps}")
    return float(eps)


def level_step(k: int, h: int, eps: float, u_max: float, scheme: str = "one-part") -> float:
    """Grid spacing at step ``k``: ``eps*u_max / ((h-k)(ln h + 1))``, divided by 3 for three-part."""
    check_eps(eps)
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown grid scheme {scheme!r}")
    if not 0 <= k < h:
        raise ValidationError(f"step index {k} outside [0, {h})")
    step = eps * u_max / ((h - k) * (math.log(h) + 1.0))
    if scheme == "three-part":
        step = step / 3.0
    return step


def grid_for_level(
    k: int,
    h: int,
    eps: float,
    u_max: float,
    scheme: str = "one-part",
    upper: float | None = None,
) -> ValueGrid:
    """Grid of achievable discretized values at step ``k``.

    ``upper`` overrides the default range ``u_max*(h-k)``; a zero utility
    bound collapses the grid to the single level 0.
    """
    if u_max < 0:
        raise ValidationError(f"u_max must be non-negative, got {u_max}")
    step = level_step(k, h, eps, u_max, scheme)
    if u_max == 0:
        return ValueGrid(1.0, 1)
    bound = u_max * (h - k) if upper is None else upper
    return ValueGrid(step, int(floor_index(bound / step)) + 1 if bound > 0 else 1)


def round_down(x: float, grid: "ValueGrid | float") -> int:
    """Largest index ``i`` with ``i*step <= x`` up to the relative floor guard."""
    step = grid.step if isinstance(grid, ValueGrid) else float(grid)
    return max(0, int(floor_index(x / step)))


def round_down_array(x: np.ndarray, step: float) -> np.ndarray:
    return np.maximum(floor_index(np.asarray(x, dtype=float) / step), 0)


def round_up_array(x: np.ndarray, step: float) -> np.ndarray:
    """Smallest index ``i`` with ``i*step >= x`` (clamped at 0), guarded like the floor."""
    return np.maximum(ceil_index(np.asarray(x, dtype=float) / step), 0)


# --------------------------------------------------------------------------
# utility-bound trimming


@dataclass(frozen=True)
class TrimResult:
    """Outcome of removing actions that no feasible policy can use.

    ``value_floor`` is the best value among the feasible min-risk completions
    examined, so it never exceeds the optimal feasible value.
    """

    allowed: dict
    u_max: float
    removed: tuple
    value_floor: float
    min_risk: float


def _local_risk(inst: MdpInstance, s: str, a: str, acc: float) -> float:
    if inst.mode is Mode.CHANCE:
        r = inst.r(s)
        return r + (1.0 - r) * acc
    return inst.c(s, a) + acc


def _pursue(inst, g, m, best, k, s, a):
    """Least risky way to reach ``s_k`` with positive probability and play ``a`` there.

    Walking up from ``s_k``, every ancestor picks the action minimizing risk
    subject to sending one successor further along a path to ``s_k``; all
    other states keep their minimum-risk actions.  Returns the estimated root
    risk and the policy it describes, or ``None`` if the root cannot reach.
    The estimate is exact when no state has two parents and a lower bound on
    the risk of every such policy otherwise.
    """
    acc_r = 0.0
    for t, p in g.successors[(k, s, a)]:
        acc_r += p * m[(k + 1, t)]
    front = {s: _local_risk(inst, s, a, acc_r)}
    choice = {(k, s): (a, None)}
    for j in range(k - 1, -1, -1):
        nxt = {}
        for x in g.levels[j]:
            found = None
            for b in g.actions[(j, x)]:
                succ = g.successors[(j, x, b)]
                base = 0.0
                for t, p in succ:
                    base += p * m[(j + 1, t)]
                lift, via = None, None
                for t, p in succ:
                    if t in front:
                        extra = p * (front[t] - m[(j + 1, t)])
                        if lift is None or extra < lift:
                            lift, via = extra, t
                if via is None:
                    continue
                r = _local_risk(inst, x, b, base + lift)
                if found is None or r < found[0]:
                    found = (r, b, via)
            if found is not None:
                nxt[x] = found[0]
                choice[(j, x)] = (found[1], found[2])
        front = nxt
    if inst.initial not in front:
        return None
    assignment = {(x, j): b for (j, x), b in best.items()}
    x, j = inst.initial, 0
    while x is not None:
        b, via = choice[(j, x)]
        assignment[(x, j)] = b
        x, j = via, j + 1
    return front[inst.initial], Policy(assignment)


def trim_umax(inst: MdpInstance, g: LayeredGraph | None = None, slack: float = 1e-9) -> TrimResult:
    """Drop every action that no feasible policy can play.

    For each reachable ``(k, s, a)`` the cheapest policy that reaches ``s_k``
    and plays ``a`` there is built from minimum-risk actions plus one
    pursuing path; when even that policy breaks the budget the action is
    removed.  States left without actions then remove the actions leading
    into them, until nothing changes.  ``value_floor`` is the best exact
    value among the feasible policies examined.
    """
    if g is None:
        g = build_layers(inst)
    h = inst.horizon
    chance = inst.mode is Mode.CHANCE

    # backward: minimum risk, its value, and the minimizing action
    m = {(h, s): (inst.r(s) if chance else 0.0) for s in g.levels[h]}
    mv = {(h, s): 0.0 for s in g.levels[h]}
    best: dict[tuple[int, str], str] = {}
    for k in range(h - 1, -1, -1):
        for s in g.levels[k]:
            top = None
            for a in g.actions[(k, s)]:
                acc_r = 0.0
                acc_v = 0.0
                for t, p in g.successors[(k, s, a)]:
                    acc_r += p * m[(k + 1, t)]
                    acc_v += p * mv[(k + 1, t)]
                cand = (_local_risk(inst, s, a, acc_r), acc_v + inst.u(s, a), a)
                if top is None or cand[0] < top[0]:
                    top = cand
            m[(k, s)], mv[(k, s)], best[(k, s)] = top

    root = (0, inst.initial)
    base_r, base_v = m[root], mv[root]
    if base_r > inst.budget + slack:
        raise Infeasible(
            f"minimum achievable {'risk' if chance else 'cost'} {base_r:.6g} exceeds budget {inst.budget:.6g}"
        )
    value_floor = base_v if base_r <= inst.budget else 0.0
    allowed: dict[tuple[int, str], list[str]] = {}
    removed = []
    for k in range(h):
        for s in g.levels[k]:
            keep = []
            for a in g.actions[(k, s)]:
                found = _pursue(inst, g, m, best, k, s, a)
                if found is None or found[0] > inst.budget + slack:
                    removed.append((k, s, a))
                    continue
                keep.append(a)
                ev = evaluate_policy(inst, g, found[1])
                if ev.feasible:
                    value_floor = max(value_floor, ev.value)
            allowed[(k, s)] = keep

    # states stranded without actions make every action leading into them unusable
    changed = True
    while changed:
        changed = False
        for k in range(h - 1, 0, -1):
            dead = {s for s in g.levels[k] if not allowed[(k, s)]}
            if not dead:
                continue
            for x in g.levels[k - 1]:
                for a in list(allowed[(k - 1, x)]):
                    if any(t in dead for t, _ in g.successors[(k - 1, x, a)]):
                        allowed[(k - 1, x)].remove(a)
                        removed.append((k - 1, x, a))
                        changed = True
    if not allowed[root]:
        raise Infeasible("every action at the initial state is unusable within the budget")

    allowed = {key: tuple(acts) for key, acts in allowed.items()}
    trimmed = build_layers(inst, allowed)
    u_max = max(
        (inst.u(s, a) for (k, s), acts in trimmed.actions.items() for a in acts),
        default=0.0,
    )
    order = inst.state_index, inst.action_index
    removed.sort(key=lambda r: (r[0], order[0][r[1]], order[1][r[2]]))
    return TrimResult(allowed, u_max, tuple(removed), value_floor, base_r)
