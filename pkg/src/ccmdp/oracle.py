"""Exact optimum by exhaustive enumeration of deterministic policies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from ccmdp.errors import CcmdpError, Infeasible, TooLarge, ValidationError
from ccmdp.evaluate import policy_levels
from ccmdp.layers import LayeredGraph, build_layers
from ccmdp.model import FEAS_TOL, MdpInstance, Mode, Policy, validate_instance

ORACLE_GUARD = 10**7
CHUNK = 1 << 16


@dataclass(frozen=True)
class OracleResult:
    optimal_value: float
    optimal_policy: Policy
    feasible_count: int
    total_count: int
    risk_or_cost: float = 0.0


def policy_count(g: LayeredGraph) -> int:
    """Number of deterministic assignments over all reachable ``(k, state)`` pairs."""
    return math.prod(len(acts) for acts in g.actions.values())


def _unconstrained_value(inst: MdpInstance, g: LayeredGraph) -> float:
    h = inst.horizon
    v = {s: 0.0 for s in g.levels[h]}
    for k in range(h - 1, -1, -1):
        nv = {}
        for s in g.levels[k]:
            best = -math.inf
            for a in g.actions[(k, s)]:
                acc = 0.0
                for t, p in g.successors[(k, s, a)]:
                    acc += p * v[t]
                best = max(best, acc + inst.u(s, a))
            nv[s] = best
        v = nv
    return v[inst.initial]


def enumerate_optimal(
    inst: MdpInstance,
    g: LayeredGraph | None = None,
    guard: int = ORACLE_GUARD,
) -> OracleResult:
    """Feasible maximizer over every deterministic policy.

    Assignments are indexed in mixed radix with the first reachable pair
    (step 0, then state order) most significant, so the first maximizer found
    is the lexicographically smallest.  The returned policy is restricted to
    the pairs it actually reaches.
    """
    if g is None:
        g = build_layers(validate_instance(inst))
    h = inst.horizon
    chance = inst.mode is Mode.CHANCE
    pairs = [(k, s) for k in range(h) for s in g.levels[k]]
    radix = [len(g.actions[p]) for p in pairs]
    total = math.prod(radix)
    if total > guard:
        raise TooLarge(f"too large: {total} policies exceed the oracle guard of {guard}")
    pos = {p: i for i, p in enumerate(pairs)}
    weights = np.ones(len(pairs), dtype=np.int64)
    for i in range(len(pairs) - 2, -1, -1):
        weights[i] = weights[i + 1] * radix[i + 1]

    best_v, best_i, feasible = -math.inf, -1, 0
    best_c = math.nan
    for lo in range(0, total, CHUNK):
        ids = np.arange(lo, min(lo + CHUNK, total), dtype=np.int64)
        n = ids.size
        val = {s: np.zeros(n) for s in g.levels[h]}
        con = {s: np.full(n, inst.r(s) if chance else 0.0) for s in g.levels[h]}
        for k in range(h - 1, -1, -1):
            nv, nc = {}, {}
            for s in g.levels[k]:
                i = pos[(k, s)]
                digit = (ids // weights[i]) % radix[i]
                out_v = np.empty(n)
                out_c = np.empty(n)
                for ai, a in enumerate(g.actions[(k, s)]):
                    sel = digit == ai
                    if not sel.any():
                        continue
                    acc_v = np.zeros(int(sel.sum()))
                    acc_c = np.zeros(int(sel.sum()))
                    for t, p in g.successors[(k, s, a)]:
                        acc_v = acc_v + p * val[t][sel]
                        acc_c = acc_c + p * con[t][sel]
                    out_v[sel] = acc_v + inst.u(s, a)
                    if chance:
                        r = inst.r(s)
                        out_c[sel] = r + (1.0 - r) * acc_c
                    else:
                        out_c[sel] = inst.c(s, a) + acc_c
                nv[s], nc[s] = out_v, out_c
            val, con = nv, nc
        v0, c0 = val[inst.initial], con[inst.initial]
        ok = c0 <= inst.budget + FEAS_TOL
        feasible += int(ok.sum())
        if ok.any():
            j = int(np.argmax(np.where(ok, v0, -np.inf)))
            if v0[j] > best_v:
                best_v, best_i, best_c = float(v0[j]), int(ids[j]), float(c0[j])

    if best_i < 0:
        raise Infeasible("no feasible policy")
    full = {
        (s, k): g.actions[(k, s)][int((best_i // weights[pos[(k, s)]]) % radix[pos[(k, s)]])]
        for (k, s) in pairs
    }
    pi = Policy(full)
    reached = policy_levels(inst, g, pi)
    pi = Policy({(s, k): full[(s, k)] for k in range(h) for s in reached[k]})

    if (chance and inst.budget >= 1.0) or (not chance and math.isinf(inst.budget)):
        check = _unconstrained_value(inst, g)
        if check != best_v:
            raise CcmdpError(f"oracle cross-check failed: enumeration {best_v!r} vs backward induction {check!r}")
    return OracleResult(best_v, pi, feasible, total, best_c)


def unroll(
    inst: MdpInstance,
    goals: Iterable[str],
    horizon: int,
    budget: float,
) -> MdpInstance:
    """Time-unrolled copy with ``s@t`` states where non-goal states at the horizon fail."""
    goals = set(goals)
    states = [f"{s}@{t}" for t in range(horizon + 1) for s in inst.states]
    transitions, utility, risk = {}, {}, {}
    for t in range(horizon):
        for (s, a), succ in inst.transitions.items():
            transitions[(f"{s}@{t}", a)] = tuple((f"{x}@{t + 1}", p) for x, p in succ)
            if inst.u(s, a):
                utility[(f"{s}@{t}", a)] = inst.u(s, a)
    for t in range(horizon + 1):
        for s in inst.states:
            r = 1.0 if (t == horizon and s not in goals) else inst.r(s)
            if r:
                risk[f"{s}@{t}"] = r
    return MdpInstance(
        states=states,
        actions=inst.actions,
        transitions=transitions,
        utility=utility,
        initial=f"{inst.initial}@0",
        horizon=horizon,
        budget=budget,
        risk=risk,
    )


def ssp_solve(
    inst: MdpInstance,
    goals: Iterable[str],
    prob_threshold: float,
    h_max: int,
    solver: Callable[[MdpInstance], Policy] | None = None,
) -> tuple[int, Policy]:
    """Shortest horizon whose unrolled chance-constrained problem is feasible.

    A run fails if it has not reached a goal state by the horizon, so a
    feasible policy reaches the goal with probability at least
    ``prob_threshold``.  The returned policy is keyed by the original state
    identifiers and step.  ``solver`` defaults to the exact enumeration.
    """
    goals = tuple(goals)
    for s in goals:
        if s not in inst.state_index:
            raise ValidationError(f"unknown goal state {s!r}")
        for a in inst.available(s):
            if any(t not in goals for t, p in inst.transitions[(s, a)] if p > 0):
                raise ValidationError(f"goal state {s!r} is not absorbing under action {a!r}")
    if not 0.0 <= prob_threshold <= 1.0:
        raise ValidationError(f"probability threshold {prob_threshold} outside [0, 1]")
    if solver is None:
        solver = lambda m: enumerate_optimal(m).optimal_policy  # noqa: E731
    for h in range(1, h_max + 1):
        model = unroll(inst, goals, h, 1.0 - prob_threshold)
        try:
            pi = solver(model)
        except Infeasible:
            continue
        return h, Policy({(s.rsplit("@", 1)[0], k): a for (s, k), a in pi.assignment.items()})
    raise Infeasible(f"no horizon up to {h_max} reaches the goal with probability {prob_threshold}")
