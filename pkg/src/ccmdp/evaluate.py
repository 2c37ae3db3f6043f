"""Exact policy evaluation and Monte Carlo failure estimation."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ccmdp.errors import PolicyError, ValidationError
from ccmdp.layers import LayeredGraph, build_layers
from ccmdp.model import FEAS_TOL, EvalReport, MdpInstance, Mode, Policy

SIM_CHUNK = 1 << 15
"""Samples per independently seeded chunk; fixed so results ignore thread count."""


def _policy_successors(g: LayeredGraph, pi: Policy, k: int, s: str):
    a = pi(s, k)
    try:
        return a, g.successors[(k, s, a)]
    except KeyError:
        raise PolicyError(f"action {a!r} is not available at state {s!r}, step {k}") from None


def policy_levels(inst: MdpInstance, g: LayeredGraph, pi: Policy) -> list[list[str]]:
    """States visited with positive probability under ``pi``, per step."""
    order = inst.state_index
    levels = [[inst.initial]]
    for k in range(inst.horizon):
        nxt: set[str] = set()
        for s in levels[-1]:
            _, succ = _policy_successors(g, pi, k, s)
            nxt.update(t for t, _ in succ)
        levels.append(sorted(nxt, key=order.__getitem__))
    return levels


def evaluate_policy(inst: MdpInstance, g: LayeredGraph | None, pi: Policy) -> EvalReport:
    """Exact expected utility and execution risk (or expected cost) of ``pi``."""
    if g is None:
        g = build_layers(inst)
    h = inst.horizon
    levels = policy_levels(inst, g, pi)
    chance = inst.mode is Mode.CHANCE
    value = {s: 0.0 for s in levels[h]}
    con = {s: (inst.r(s) if chance else 0.0) for s in levels[h]}
    for k in range(h - 1, -1, -1):
        nv: dict[str, float] = {}
        nc: dict[str, float] = {}
        for s in levels[k]:
            a, succ = _policy_successors(g, pi, k, s)
            acc_v = 0.0
            acc_c = 0.0
            for t, p in succ:
                acc_v += p * value[t]
                acc_c += p * con[t]
            nv[s] = acc_v + inst.u(s, a)
            if chance:
                r = inst.r(s)
                nc[s] = r + (1.0 - r) * acc_c
            else:
                nc[s] = inst.c(s, a) + acc_c
        value, con = nv, nc
    v0 = value[inst.initial]
    c0 = con[inst.initial]
    return EvalReport(v0, c0, c0 <= inst.budget + FEAS_TOL, inst.mode)


def default_threads() -> int:
    env = os.environ.get("CCMDP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def simulate_risk(
    inst: MdpInstance,
    g: LayeredGraph | None,
    pi: Policy,
    samples: int,
    seed: int,
    threads: int | None = None,
) -> float:
    """Monte Carlo estimate of the probability that some visited state fails.

    Every visited state ``s`` fails independently with probability ``r(s)``.
    Samples are split into fixed-size chunks, each with its own child seed,
    so the estimate depends only on ``seed`` and ``samples``.
    """
    if samples <= 0:
        raise ValidationError("samples must be a positive integer")
    if g is None:
        g = build_layers(inst)
    h = inst.horizon
    idx = inst.state_index
    risk = np.array([inst.r(s) for s in inst.states])
    # per step: state ordinal -> (successor ordinals, cumulative probabilities)
    moves: list[dict[int, tuple[np.ndarray, np.ndarray]]] = []
    for k, lvl in enumerate(policy_levels(inst, g, pi)[:h]):
        table = {}
        for s in lvl:
            _, succ = _policy_successors(g, pi, k, s)
            if succ:
                cum = np.cumsum([p for _, p in succ])
                cum[-1] = 1.0
                table[idx[s]] = (np.array([idx[t] for t, _ in succ]), cum)
            else:
                table[idx[s]] = (np.empty(0, dtype=int), np.empty(0))
        moves.append(table)

    sizes = [SIM_CHUNK] * (samples // SIM_CHUNK)
    if samples % SIM_CHUNK:
        sizes.append(samples % SIM_CHUNK)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(n: int, ss: np.random.SeedSequence) -> int:
        rng = np.random.default_rng(ss)
        cur = np.full(n, idx[inst.initial])
        failed = np.zeros(n, dtype=bool)
        for k in range(h + 1):
            alive = cur >= 0
            failed[alive] |= rng.random(int(alive.sum())) < risk[cur[alive]]
            if k == h:
                break
            nxt = np.full(n, -1)
            u = rng.random(n)
            for s, (succ, cum) in moves[k].items():
                at = cur == s
                if succ.size and at.any():
                    pick = np.searchsorted(cum, u[at], side="right")
                    nxt[at] = succ[np.minimum(pick, succ.size - 1)]
            cur = nxt
        return int(failed.sum())

    workers = max(1, threads or default_threads())
    if workers == 1 or len(sizes) == 1:
        fails = [run(n, ss) for n, ss in zip(sizes, seeds)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            fails = list(ex.map(run, sizes, seeds))
    return sum(fails) / samples
