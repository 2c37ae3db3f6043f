"""Small hand-built instances and an independent brute-force evaluator."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ccmdp import GeneratorParams, MdpInstance, Policy, build_layers, generate_layered

settings.register_profile("ccmdp", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ccmdp")


def make(
    transitions: dict,
    utility: dict | None = None,
    risk: dict | None = None,
    cost: dict | None = None,
    horizon: int = 1,
    budget: float = 1.0,
    mode: str = "chance",
    initial: str = "s0",
) -> MdpInstance:
    """Instance whose states and actions are listed in order of first mention."""
    states, actions = [initial], []
    for (s, a), succ in transitions.items():
        for x in (s, *(t for t, _ in succ)):
            if x not in states:
                states.append(x)
        if a not in actions:
            actions.append(a)
    for s in risk or {}:
        if s not in states:
            states.append(s)
    return MdpInstance(
        states=states,
        actions=actions,
        transitions=transitions,
        utility=utility or {},
        initial=initial,
        horizon=horizon,
        budget=budget,
        mode=mode,
        risk=risk or {},
        cost=cost or {},
    )


def two_action(budget: float, mode: str = "chance") -> MdpInstance:
    """One step: ``a1`` earns 5 into a safe leaf, ``a2`` earns 10 into a leaf with risk 0.3 (cost 5 vs 1)."""
    trans = {("s0", "a1"): (("safe", 1.0),), ("s0", "a2"): (("risky", 1.0),)}
    util = {("s0", "a1"): 5.0, ("s0", "a2"): 10.0}
    if mode == "chance":
        return make(trans, util, risk={"risky": 0.3}, budget=budget)
    return make(trans, util, cost={("s0", "a1"): 1.0, ("s0", "a2"): 5.0}, budget=budget, mode="cost")


def shared_successor() -> MdpInstance:
    """Two step-1 states both able to reach ``c`` at step 2."""
    trans = {
        ("s0", "x"): (("a", 0.5), ("b", 0.5)),
        ("s0", "y"): (("a", 1.0),),
        ("a", "x"): (("c", 1.0),),
        ("a", "y"): (("d", 1.0),),
        ("b", "x"): (("c", 1.0),),
        ("b", "y"): (("e", 1.0),),
    }
    util = {("s0", "x"): 2.0, ("s0", "y"): 1.0, ("a", "x"): 4.0, ("a", "y"): 3.0, ("b", "x"): 6.0, ("b", "y"): 1.0}
    return make(trans, util, risk={"c": 0.2, "d": 0.05, "e": 0.1}, horizon=2, budget=0.15)


def random_instance(seed: int, **overrides) -> MdpInstance:
    rng = np.random.default_rng(seed)
    kw = dict(
        n_states_per_level=int(rng.integers(2, 4)),
        n_actions=int(rng.integers(1, 4)),
        horizon=int(rng.integers(1, 4)),
        gamma_target=int(rng.integers(1, 3)),
        seed=seed,
        max_policies=5000,
    )
    kw.update(overrides)
    return generate_layered(GeneratorParams(**kw))


def all_policies(inst: MdpInstance):
    """Every deterministic policy over the reachable ``(k, state)`` pairs."""
    g = build_layers(inst)
    pairs = [(k, s) for k in range(inst.horizon) for s in g.levels[k]]
    for combo in itertools.product(*(g.actions[p] for p in pairs)):
        yield Policy({(s, k): a for (k, s), a in zip(pairs, combo)})


def brute_force(inst: MdpInstance, pi: Policy) -> tuple[float, float]:
    """Value and failure probability (or cost) by explicit enumeration of runs.

    Failure probability is one minus the product of survival along each run,
    which is independent of the backward recursion used by the library.
    """
    value = 0.0
    con = 0.0
    chance = inst.mode.value == "chance"

    def walk(s, k, prob, survive, acc_cost):
        nonlocal value, con
        if k == inst.horizon:
            if chance:
                con += prob * (1.0 - survive * (1.0 - inst.r(s)))
            else:
                con += prob * acc_cost
            return
        a = pi(s, k)
        value += prob * inst.u(s, a)
        succ = [(t, p) for t, p in inst.transitions[(s, a)] if p > 0]
        if not succ:  # terminal action: the run stops here
            con += prob * ((1.0 - survive * (1.0 - inst.r(s))) if chance else acc_cost + inst.c(s, a))
        for t, p in succ:
            walk(t, k + 1, prob * p, survive * (1.0 - inst.r(s)), acc_cost + inst.c(s, a))

    walk(inst.initial, 0, 1.0, 1.0, 0.0)
    return value, con


def run_count(inst: MdpInstance, pi: Policy) -> int:
    def count(s, k):
        if k == inst.horizon:
            return 1
        return max(1, sum(count(t, k + 1) for t, p in inst.transitions[(s, pi(s, k))] if p > 0))

    return count(inst.initial, 0)


@pytest.fixture
def close():
    return lambda a, b, tol=1e-12: math.isclose(a, b, rel_tol=0.0, abs_tol=tol)


ACCEPTANCE: list[str] = []
"""One summary line per acceptance criterion, filled by test_acceptance."""


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
