from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_policies, make, random_instance, two_action
from ccmdp import Infeasible, TooLarge, ValidationError, build_layers, enumerate_optimal, evaluate_policy, ssp_solve
from ccmdp.oracle import policy_count


def test_single_action():
    inst = make({("s0", "go"): (("s1", 0.5), ("s2", 0.5))}, {("s0", "go"): 3.0}, risk={"s2": 0.2}, budget=0.5)
    res = enumerate_optimal(inst)
    assert res.optimal_policy("s0", 0) == "go"
    assert res.optimal_value == evaluate_policy(inst, None, res.optimal_policy).value == 3.0
    assert res.total_count == res.feasible_count == 1


def test_two_action_optimum():
    res = enumerate_optimal(two_action(0.2))
    assert res.optimal_value == 5.0 and res.optimal_policy("s0", 0) == "a1"
    assert res.total_count == 2 and res.feasible_count == 1


def test_zero_budget_all_risky():
    inst = make({("s0", "a"): (("x", 1.0),), ("s0", "b"): (("y", 1.0),)}, risk={"x": 0.1, "y": 0.5}, budget=0.0)
    with pytest.raises(Infeasible, match="no feasible policy"):
        enumerate_optimal(inst)


def test_guard():
    inst = random_instance(1, n_actions=3, horizon=3, n_states_per_level=3, max_policies=None)
    count = policy_count(build_layers(inst))
    with pytest.raises(TooLarge, match="too large"):
        enumerate_optimal(inst, guard=count - 1)
    assert enumerate_optimal(inst, guard=count).total_count == count


def test_lexicographic_tie_break():
    inst = make({("s0", "b"): (("x", 1.0),), ("s0", "a"): (("y", 1.0),)}, {("s0", "a"): 1.0, ("s0", "b"): 1.0})
    assert enumerate_optimal(inst).optimal_policy("s0", 0) == "b"  # first listed action wins


@given(st.integers(0, 10**6), st.sampled_from(["chance", "cost"]))
@settings(max_examples=40)
def test_optimal_policy_is_feasible_and_maximal(seed, mode):
    inst = random_instance(seed, mode=mode, max_policies=500)
    res = enumerate_optimal(inst)
    rep = evaluate_policy(inst, None, res.optimal_policy)
    assert rep.feasible and rep.value == res.optimal_value and res.optimal_value >= 0
    g = build_layers(inst)
    for pi in all_policies(inst):
        other = evaluate_policy(inst, g, pi)
        if other.feasible:
            assert other.value <= res.optimal_value


def _relabel(inst, rng):
    names = [f"q{i}" for i in rng.permutation(len(inst.states))]
    m = dict(zip(inst.states, names))
    order = list(rng.permutation(len(inst.states)))
    return inst.replace(
        states=[m[inst.states[i]] for i in order],
        transitions={(m[s], a): tuple((m[t], p) for t, p in succ) for (s, a), succ in inst.transitions.items()},
        utility={(m[s], a): v for (s, a), v in inst.utility.items()},
        risk={m[s]: v for s, v in inst.risk.items()},
        cost={(m[s], a): v for (s, a), v in inst.cost.items()},
        initial=m[inst.initial],
    )


@given(st.integers(0, 10**6), st.sampled_from(["chance", "cost"]))
@settings(max_examples=40)
def test_permutation_invariance(seed, mode):
    inst = random_instance(seed, mode=mode, max_policies=2000)
    other = _relabel(inst, np.random.default_rng(seed))
    a, b = enumerate_optimal(inst).optimal_value, enumerate_optimal(other).optimal_value
    assert math.isclose(a, b, rel_tol=0, abs_tol=1e-12)


def _backward_induction(inst):
    g = build_layers(inst)
    v = {s: 0.0 for s in g.levels[inst.horizon]}
    for k in range(inst.horizon - 1, -1, -1):
        v = {
            s: max(inst.u(s, a) + sum(p * v[t] for t, p in g.successors[(k, s, a)]) for a in g.actions[(k, s)])
            for s in g.levels[k]
        }
    return v[inst.initial]


@given(st.integers(0, 10**6))
@settings(max_examples=30)
def test_unconstrained_matches_backward_induction(seed):
    inst = random_instance(seed, budget=1.0, max_policies=2000)
    assert enumerate_optimal(inst).optimal_value == pytest.approx(_backward_induction(inst), abs=1e-12)
    cost = random_instance(seed, mode="cost", budget=math.inf, max_policies=2000)
    assert enumerate_optimal(cost).optimal_value == pytest.approx(_backward_induction(cost), abs=1e-12)


@given(st.integers(0, 10**6), st.sampled_from(["chance", "cost"]))
@settings(max_examples=40)
def test_removing_unused_action_keeps_optimum(seed, mode):
    inst = random_instance(seed, mode=mode, max_policies=2000)
    res = enumerate_optimal(inst)
    used = {(s, a) for (s, _), a in res.optimal_policy}
    for (s, a) in sorted(inst.transitions):
        if (s, a) in used or len(inst.available(s)) < 2:
            continue
        smaller = inst.replace(
            transitions={key: v for key, v in inst.transitions.items() if key != (s, a)},
            utility={key: v for key, v in inst.utility.items() if key != (s, a)},
            cost={key: v for key, v in inst.cost.items() if key != (s, a)},
        )
        assert enumerate_optimal(smaller).optimal_value == res.optimal_value
        break


# stochastic shortest path ------------------------------------------------------


def test_ssp_deterministic_path():
    inst = make({("s0", "go"): (("s1", 1.0),), ("s1", "go"): (("g", 1.0),), ("g", "stay"): (("g", 1.0),)})
    h, pi = ssp_solve(inst, ["g"], 1.0, 5)
    assert h == 2 and pi("s0", 0) == "go" and pi("s1", 1) == "go"


def test_ssp_retry_loop():
    inst = make({("s0", "try"): (("g", 0.5), ("s0", 0.5)), ("g", "stay"): (("g", 1.0),)})
    h, pi = ssp_solve(inst, ["g"], 0.7, 5)
    assert h == 2 and pi("s0", 0) == "try"
    assert ssp_solve(inst, ["g"], 0.8, 5)[0] == 3  # 1 - 0.5^3 = 0.875


def test_ssp_unreachable_goal():
    inst = make({("s0", "spin"): (("s0", 1.0),), ("g", "stay"): (("g", 1.0),)})
    with pytest.raises(Infeasible, match="no horizon up to 4"):
        ssp_solve(inst, ["g"], 0.5, 4)


def test_ssp_rejects_leaky_goal():
    inst = make({("s0", "go"): (("g", 1.0),), ("g", "go"): (("s0", 1.0),)})
    with pytest.raises(ValidationError, match="absorbing"):
        ssp_solve(inst, ["g"], 0.5, 3)
