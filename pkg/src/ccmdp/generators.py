"""Seeded random instances with controlled structure, and a slippery gridworld."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ccmdp.errors import ValidationError
from ccmdp.layers import build_layers
from ccmdp.model import MdpInstance, Mode, forward_levels, validate_instance
from ccmdp.oracle import policy_count


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for :func:`generate_layered`.

    ``gamma_target`` bounds successor-set size and ``psi_target`` bounds the
    inclusive overlap count and cluster size; ``exact_*`` demands equality.
    ``budget=None`` places the budget 20-80% of the way from the minimum
    achievable risk (or cost) to that of the unconstrained optimum, so it
    usually binds.
    """

    n_states_per_level: int = 3
    n_actions: int = 2
    horizon: int = 3
    gamma_target: int = 2
    psi_target: int = 1
    risk_range: tuple[float, float] = (0.0, 0.3)
    utility_range: tuple[float, float] = (0.0, 10.0)
    budget: float | None = None
    mode: str = "chance"
    seed: int = 0
    cost_range: tuple[float, float] = (0.0, 5.0)
    share_prob: float | None = None
    exact_psi: bool = False
    exact_gamma: bool = False
    max_policies: int | None = None
    max_tries: int = 500

    def check(self) -> None:
        if self.psi_target < 1 or self.gamma_target < 1:
            raise ValidationError("psi_target and gamma_target must be at least 1")
        if self.n_states_per_level < 1 or self.n_actions < 1 or self.horizon < 1:
            raise ValidationError("sizes must be positive")
        for name in ("risk_range", "utility_range", "cost_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValidationError(f"{name} is not ordered: {lo} > {hi}")
        lo, hi = self.risk_range
        if lo < 0 or hi > 1:
            raise ValidationError("risk_range must lie within [0, 1]")
        if self.utility_range[0] < 0 or self.cost_range[0] < 0:
            raise ValidationError("utilities and costs must be non-negative")
        if self.psi_target == 1 and (self.share_prob or 0) > 0:
            raise ValidationError("params unsatisfiable: psi_target=1 forbids shared successors")
        if self.psi_target > 1 and self.n_states_per_level < 2:
            raise ValidationError("params unsatisfiable: sharing needs two states per level")


def _probabilities(rng: np.random.Generator, m: int) -> list[float]:
    if m == 1:
        return [1.0]
    raw = 0.05 + (1 - 0.05 * m) * rng.dirichlet(np.ones(m))
    head = [round(float(x), 3) for x in raw[:-1]]
    return head + [round(1.0 - sum(head), 3)]


def _budget(inst: MdpInstance, rng: np.random.Generator) -> float:
    g = build_layers(inst)
    h = inst.horizon
    chance = inst.mode is Mode.CHANCE
    lo = {s: (inst.r(s) if chance else 0.0) for s in g.levels[h]}
    greedy_v = {s: 0.0 for s in g.levels[h]}
    greedy_c = dict(lo)
    for k in range(h - 1, -1, -1):
        nlo, nv, nc = {}, {}, {}
        for s in g.levels[k]:
            best_lo, best_v, best_c = np.inf, -np.inf, 0.0
            for a in g.actions[(k, s)]:
                acc_lo = acc_v = acc_c = 0.0
                for t, p in g.successors[(k, s, a)]:
                    acc_lo += p * lo[t]
                    acc_v += p * greedy_v[t]
                    acc_c += p * greedy_c[t]
                if chance:
                    r = inst.r(s)
                    x, c = r + (1 - r) * acc_lo, r + (1 - r) * acc_c
                else:
                    x, c = inst.c(s, a) + acc_lo, inst.c(s, a) + acc_c
                best_lo = min(best_lo, x)
                if acc_v + inst.u(s, a) > best_v:
                    best_v, best_c = acc_v + inst.u(s, a), c
            nlo[s], nv[s], nc[s] = best_lo, best_v, best_c
        lo, greedy_v, greedy_c = nlo, nv, nc
    low, high = lo[inst.initial], greedy_c[inst.initial]
    return float(low + rng.uniform(0.2, 0.8) * max(high - low, 0.0))


def _build(params: GeneratorParams, rng: np.random.Generator) -> MdpInstance:
    h = params.horizon
    actions = [f"a{i}" for i in range(params.n_actions)]
    share = params.share_prob if params.share_prob is not None else (0.0 if params.psi_target == 1 else 0.5)
    levels = [["k0_0"]]
    transitions: dict = {}
    for k in range(h):
        parents = levels[k]
        total = int(rng.integers(len(parents), max(len(parents), params.n_states_per_level) + 1))
        sizes = np.ones(len(parents), dtype=int)
        for _ in range(total - len(parents)):
            sizes[rng.integers(len(parents))] += 1
        pools, names, idx = [], [], 0
        for size in sizes:
            pool = [f"k{k + 1}_{idx + i}" for i in range(size)]
            idx += size
            pools.append(pool)
            names.extend(pool)
        levels.append(names)
        for pi, s in enumerate(parents):
            pool = pools[pi]
            for a in actions:
                m = int(min(rng.integers(1, params.gamma_target + 1), len(pool)))
                succ = [pool[i] for i in sorted(rng.choice(len(pool), size=m, replace=False))]
                if len(parents) > 1 and rng.random() < share:
                    other = pools[(pi + 1 + int(rng.integers(len(parents) - 1))) % len(parents)]
                    extra = other[int(rng.integers(len(other)))]
                    if len(succ) < params.gamma_target:
                        succ.append(extra)
                    else:
                        succ[-1] = extra
                probs = _probabilities(rng, len(succ))
                transitions[(s, a)] = tuple(zip(succ, probs))
    states = [s for lvl in levels for s in lvl]
    utility = {key: round(float(rng.uniform(*params.utility_range)), 3) for key in transitions}
    mode = Mode.parse(params.mode)
    if mode is Mode.CHANCE:
        risk = {s: round(float(rng.uniform(*params.risk_range)), 3) for s in states}
        cost = {}
    else:
        risk = {}
        cost = {key: round(float(rng.uniform(*params.cost_range)), 3) for key in transitions}
    inst = MdpInstance(states, actions, transitions, utility, "k0_0", h, 0.0, mode, risk, cost)
    reachable = {s for lvl in forward_levels(inst) for s in lvl}
    keep = [s for s in states if s in reachable]
    inst = inst.replace(
        states=keep,
        transitions={key: v for key, v in transitions.items() if key[0] in reachable},
        utility={key: v for key, v in utility.items() if key[0] in reachable},
        risk={s: v for s, v in risk.items() if s in reachable},
        cost={key: v for key, v in cost.items() if key[0] in reachable},
    )
    budget = params.budget if params.budget is not None else _budget(inst, rng)
    return inst.replace(budget=budget)


def generate_layered(params: GeneratorParams) -> MdpInstance:
    """Random layered instance whose measured structure meets the targets.

    Candidates are drawn from per-attempt child seeds and rejected until the
    measured gamma, overlap count, cluster size and (optionally) policy count
    satisfy the parameters.
    """
    params.check()
    for attempt in range(params.max_tries):
        rng = np.random.default_rng([params.seed, attempt])
        inst = _build(params, rng)
        g = build_layers(inst)
        if g.gamma > params.gamma_target or (params.exact_gamma and g.gamma != params.gamma_target):
            continue
        if g.psi > params.psi_target or g.max_cluster > params.psi_target:
            continue
        if params.exact_psi and g.psi != params.psi_target:
            continue
        if params.max_policies is not None and policy_count(g) > params.max_policies:
            continue
        return validate_instance(inst)
    raise ValidationError(f"params unsatisfiable: no instance met the structure targets in {params.max_tries} tries")


# --------------------------------------------------------------------------
# gridworld

MOVES = {"up": (0, 1), "down": (0, -1), "left": (-1, 0), "right": (1, 0)}
PERPENDICULAR = {"up": ("left", "right"), "down": ("left", "right"), "left": ("up", "down"), "right": ("up", "down")}


def generate_gridworld(
    width: int,
    height: int,
    cliffs: "Iterable[tuple[int, int]] | int" = (),
    goal: tuple[int, int] | None = None,
    horizon: int = 4,
    budget: float = 0.1,
    seed: int = 0,
    slip: float = 0.1,
    goal_reward: float = 10.0,
    cliff_risk: float = 1.0,
    start: tuple[int, int] = (0, 0),
) -> MdpInstance:
    """Time-unrolled slippery grid navigation as a chance-constrained problem.

    Moves succeed with probability ``1 - slip`` and otherwise go to either
    perpendicular neighbour; moves off the grid stay put.  Goal and cliff
    cells are absorbing, cliffs fail with ``cliff_risk``, and any non-goal
    cell at the horizon fails.  Entering the goal earns ``goal_reward``.
    ``cliffs`` may be a number of cells to place at random with ``seed``.
    """
    if width < 1 or height < 1:
        raise ValidationError("grid dimensions must be positive")
    goal = (width - 1, height - 1) if goal is None else tuple(goal)
    cells = {(x, y) for x in range(width) for y in range(height)}
    if isinstance(cliffs, int):
        rng = np.random.default_rng(seed)
        free = sorted(cells - {goal, tuple(start)})
        if cliffs > len(free):
            raise ValidationError(f"cannot place {cliffs} cliffs on {len(free)} free cells")
        cliff_set = {free[i] for i in rng.choice(len(free), size=cliffs, replace=False)}
    else:
        cliff_set = {tuple(c) for c in cliffs}
    for name, cell in [("goal", goal), ("start", tuple(start)), *(("cliff", c) for c in cliff_set)]:
        if cell not in cells:
            raise ValidationError(f"{name} cell {cell} lies outside the {width}x{height} grid")
    if goal in cliff_set:
        raise ValidationError(f"goal {goal} lies on a cliff")
    if not 0.0 <= slip <= 1.0:
        raise ValidationError("slip must be a probability")

    def name(c, t):
        return f"x{c[0]}y{c[1]}t{t}"

    def step(c, move):
        dx, dy = MOVES[move]
        n = (c[0] + dx, c[1] + dy)
        return n if n in cells else c

    def outcomes(c, move):
        out: dict = {}
        for m, p in [(move, 1.0 - slip), (PERPENDICULAR[move][0], slip / 2), (PERPENDICULAR[move][1], slip / 2)]:
            if p > 0:
                n = step(c, m)
                out[n] = out.get(n, 0.0) + p
        return sorted(out.items())

    states, transitions, utility, risk = [], {}, {}, {}
    frontier = [tuple(start)]
    for t in range(horizon + 1):
        nxt: set = set()
        for c in frontier:
            s = name(c, t)
            states.append(s)
            r = cliff_risk if c in cliff_set else 0.0
            if t == horizon and c != goal:
                r = 1.0
            if r:
                risk[s] = r
            if t == horizon:
                continue
            if c == goal or c in cliff_set:
                transitions[(s, "stay")] = ((name(c, t + 1), 1.0),)
                nxt.add(c)
                continue
            for move in MOVES:
                succ = outcomes(c, move)
                transitions[(s, move)] = tuple((name(n, t + 1), p) for n, p in succ)
                gain = sum(p for n, p in succ if n == goal) * goal_reward
                if gain:
                    utility[(s, move)] = gain
                nxt.update(n for n, _ in succ)
        frontier = sorted(nxt)
    return validate_instance(
        MdpInstance(
            states=states,
            actions=(*MOVES, "stay"),
            transitions=transitions,
            utility=utility,
            initial=name(tuple(start), 0),
            horizon=horizon,
            budget=budget,
            risk=risk,
        )
    )
