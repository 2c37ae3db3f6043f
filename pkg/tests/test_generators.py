from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccmdp import (
    GeneratorParams,
    Infeasible,
    ValidationError,
    build_layers,
    enumerate_optimal,
    evaluate_policy,
    generate_gridworld,
    generate_layered,
    serialize_instance,
    solve,
    validate_instance,
)


def test_same_seed_same_instance():
    p = GeneratorParams(n_states_per_level=3, horizon=3, psi_target=2, seed=17)
    assert serialize_instance(generate_layered(p)) == serialize_instance(generate_layered(p))
    other = GeneratorParams(n_states_per_level=3, horizon=3, psi_target=2, seed=18)
    assert serialize_instance(generate_layered(other)) != serialize_instance(generate_layered(p))


@given(
    st.integers(0, 10**6),
    st.integers(1, 4),
    st.integers(1, 3),
    st.integers(1, 4),
    st.integers(1, 3),
    st.sampled_from(["chance", "cost"]),
)
@settings(max_examples=60)
def test_structure_claims_hold(seed, n, gamma, horizon, psi, mode):
    if psi > 1 and n < 2:
        with pytest.raises(ValidationError, match="unsatisfiable"):
            generate_layered(GeneratorParams(n_states_per_level=n, psi_target=psi, seed=seed))
        return
    p = GeneratorParams(
        n_states_per_level=n, gamma_target=gamma, horizon=horizon, psi_target=psi, mode=mode, seed=seed
    )
    inst = generate_layered(p)
    assert validate_instance(inst) is inst
    g = build_layers(inst)
    assert all(len(succ) <= gamma for succ in g.successors.values())
    assert g.gamma <= gamma and g.psi <= psi and g.max_cluster <= psi
    if psi == 1:
        assert all(len(c) == 1 for lvl in g.clusters for c in lvl)
    assert inst.mode.value == mode


def test_exact_targets():
    inst = generate_layered(GeneratorParams(n_states_per_level=3, psi_target=2, exact_psi=True, seed=5))
    assert build_layers(inst).psi == 2
    inst = generate_layered(GeneratorParams(n_states_per_level=4, gamma_target=3, exact_gamma=True, seed=5))
    assert build_layers(inst).gamma == 3


def test_generated_budget_admits_a_policy():
    for seed in range(10):
        inst = generate_layered(GeneratorParams(n_states_per_level=3, horizon=2, seed=seed))
        res = enumerate_optimal(inst)
        assert res.feasible_count >= 1


@pytest.mark.parametrize(
    "kw",
    [
        dict(psi_target=0),
        dict(gamma_target=0),
        dict(horizon=0),
        dict(risk_range=(0.5, 0.2)),
        dict(risk_range=(0.0, 1.5)),
        dict(utility_range=(-1.0, 2.0)),
        dict(psi_target=1, share_prob=0.5),
        dict(psi_target=2, n_states_per_level=1),
    ],
)
def test_bad_params(kw):
    with pytest.raises(ValidationError):
        generate_layered(GeneratorParams(**kw))


def test_unsatisfiable_after_retries():
    p = GeneratorParams(n_states_per_level=3, n_actions=1, horizon=1, gamma_target=1, psi_target=3, exact_psi=True)
    with pytest.raises(ValidationError, match="params unsatisfiable"):
        generate_layered(p)


# gridworld ------------------------------------------------------------------------


def test_adjacent_goal_without_slip():
    inst = generate_gridworld(2, 1, goal=(1, 0), horizon=1, budget=0.0, slip=0.0)
    res = enumerate_optimal(inst)
    assert res.optimal_policy("x0y0t0", 0) == "right"
    assert res.risk_or_cost == 0.0 and res.optimal_value == 10.0


def test_goal_behind_certain_cliff():
    inst = generate_gridworld(3, 1, cliffs=[(1, 0)], goal=(2, 0), horizon=3, budget=0.5, slip=0.0)
    with pytest.raises(Infeasible):
        enumerate_optimal(inst)


def test_three_by_three_one_cliff():
    inst = generate_gridworld(3, 3, cliffs=[(1, 1)], horizon=3, budget=0.3, start=(0, 1), slip=0.1)
    best = enumerate_optimal(inst)
    assert best.optimal_value > 0
    for eps in (0.1, 0.3):
        sol = solve(inst, eps, psi_max=9)
        assert sol.report.feasible
        assert sol.report.value >= (1 - eps) * best.optimal_value - 1e-9


def test_gridworld_semantics():
    inst = generate_gridworld(2, 2, cliffs=[(1, 0)], horizon=2, budget=0.5, slip=0.2)
    assert inst.r("x1y0t1") == 1.0 and inst.r("x1y1t2") == 0.0 and inst.r("x0y0t2") == 1.0
    assert dict(inst.transitions[("x0y0t0", "up")]) == {"x0y1t1": 0.8, "x0y0t1": 0.1, "x1y0t1": 0.1}
    assert inst.transitions[("x1y0t1", "stay")] == (("x1y0t2", 1.0),)


def test_gridworld_random_cliffs_are_seeded():
    a = generate_gridworld(4, 4, cliffs=3, horizon=2, seed=9)
    b = generate_gridworld(4, 4, cliffs=3, horizon=2, seed=9)
    assert serialize_instance(a) == serialize_instance(b)


@pytest.mark.parametrize(
    "kw, pattern",
    [
        (dict(cliffs=[(2, 2)]), "goal"),
        (dict(cliffs=[(5, 0)]), "outside"),
        (dict(goal=(3, 3)), "outside"),
        (dict(cliffs=20), "cannot place"),
        (dict(slip=1.5), "slip"),
    ],
)
def test_gridworld_errors(kw, pattern):
    with pytest.raises(ValidationError, match=pattern):
        generate_gridworld(3, 3, **kw)


def test_gridworld_policy_reaches_goal():
    inst = generate_gridworld(3, 1, goal=(2, 0), horizon=2, budget=0.0, slip=0.0)
    best = enumerate_optimal(inst)
    assert evaluate_policy(inst, None, best.optimal_policy).risk_or_cost == 0.0
