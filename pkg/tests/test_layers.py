from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from conftest import make, random_instance, shared_successor
from ccmdp import build_layers


def test_chain():
    inst = make({("s0", "go"): (("s1", 1.0),), ("s1", "go"): (("s2", 1.0),)}, horizon=2)
    g = build_layers(inst)
    assert g.levels == (("s0",), ("s1",), ("s2",))
    assert g.gamma == 1 and g.psi == 1 and g.psi_exclusive == 0
    assert all(len(c) == 1 for lvl in g.clusters for c in lvl)
    assert g.disjoint


def test_disjoint_branch():
    inst = make(
        {
            ("s0", "x"): (("s1", 0.5), ("s2", 0.5)),
            ("s0", "y"): (("s1", 1.0),),
            ("s1", "x"): (("s3", 1.0),),
            ("s2", "x"): (("s4", 1.0),),
        },
        horizon=2,
    )
    g = build_layers(inst)
    assert g.psi_exclusive == 0
    assert g.clusters[1] == (("s1",), ("s2",))
    assert g.reach[(1, "s1")] == {"s3"} and g.reach[(0, "s0")] == {"s3", "s4"}


def test_shared_successor_forms_cluster():
    g = build_layers(shared_successor())
    assert g.clusters[1] == (("a", "b"),)
    assert g.psi == 2 and g.psi_exclusive == 1
    assert not g.disjoint and g.max_cluster == 2


def test_zero_probability_edges_are_ignored():
    inst = make({("s0", "go"): (("s1", 1.0), ("s2", 0.0))})
    g = build_layers(inst)
    assert g.levels[1] == ("s1",)
    assert g.successors[(0, "s0", "go")] == (("s1", 1.0),)


def test_allowed_restricts_actions():
    inst = make({("s0", "x"): (("s1", 1.0),), ("s0", "y"): (("s2", 1.0),)})
    g = build_layers(inst, {(0, "s0"): ("y",)})
    assert g.actions[(0, "s0")] == ("y",) and g.levels[1] == ("s2",)


def _reach_forward(g, k, s):
    out, stack = set(), [(k, s)]
    while stack:
        j, x = stack.pop()
        if j == g.horizon:
            out.add(x)
            continue
        for a in g.actions[(j, x)]:
            stack.extend((j + 1, t) for t, _ in g.successors[(j, x, a)])
    return out


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_layer_invariants(seed, psi):
    inst = random_instance(seed, psi_target=psi, n_states_per_level=3)
    g = build_layers(inst)
    h = inst.horizon
    assert g.levels[0] == (inst.initial,)
    for k in range(h):
        nxt = {t for s in g.levels[k] for a in g.actions[(k, s)] for t, _ in g.successors[(k, s, a)]}
        assert set(g.levels[k + 1]) == nxt
    for k, lvl in enumerate(g.levels):
        members = [s for c in g.clusters[k] for s in c]
        assert sorted(members) == sorted(lvl) and len(members) == len(set(members))
        for s in lvl:
            assert g.reach[(k, s)] == _reach_forward(g, k, s)
        for i, ci in enumerate(g.clusters[k]):
            for cj in g.clusters[k][i + 1:]:
                ra = set().union(*(g.reach[(k, s)] for s in ci))
                rb = set().union(*(g.reach[(k, s)] for s in cj))
                assert not ra & rb
                if k < h:
                    sa = {t for s in ci for a in g.actions[(k, s)] for t, _ in g.successors[(k, s, a)]}
                    sb = {t for s in cj for a in g.actions[(k, s)] for t, _ in g.successors[(k, s, a)]}
                    assert not sa & sb
    assert g.gamma == max(len(v) for v in g.successors.values())
    if g.psi == 1:
        assert g.max_cluster == 1
