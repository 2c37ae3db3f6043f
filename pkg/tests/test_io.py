from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from ccmdp import (
    Mode,
    ParseError,
    Policy,
    dump_instance,
    load_instance,
    load_policy,
    parse_instance,
    parse_policy,
    serialize_instance,
    serialize_policy,
)
from ccmdp.io import canonical

DATA = Path(__file__).parent / "data"
GOLDEN = sorted(DATA.glob("*.mdp"))


def test_minimal_document():
    inst = load_instance(DATA / "minimal.mdp")
    assert inst.states == ("s0",) and inst.horizon == 1 and inst.transitions[("s0", "stop")] == ()
    assert inst.mode is Mode.CHANCE and inst.budget == 0.0


def test_chain_document():
    inst = load_instance(DATA / "chain.mdp")
    assert inst.u("s0", "go") == 5.0 and inst.r("s1") == 0.1 and inst.budget == 0.2


@pytest.mark.parametrize("path", GOLDEN, ids=lambda p: p.stem)
def test_golden_round_trip(path):
    text = path.read_text()
    frozen = path.with_suffix(".canonical").read_text()
    assert serialize_instance(parse_instance(text)) == canonical(text) == frozen
    assert canonical(frozen) == frozen
    a, b = parse_instance(frozen), parse_instance(text)
    assert {k: sorted(v) for k, v in a.transitions.items()} == {k: sorted(v) for k, v in b.transitions.items()}


@given(st.integers(0, 10**6), st.sampled_from(["chance", "cost"]))
@settings(max_examples=30)
def test_generated_round_trip(seed, mode):
    inst = random_instance(seed, mode=mode)
    text = serialize_instance(inst)
    back = parse_instance(text)
    assert serialize_instance(back) == text
    assert back.transitions == inst.transitions and back.budget == inst.budget
    assert set(back.states) == set(inst.states) and back.utility == inst.utility


def test_dump_and_load(tmp_path):
    inst = load_instance(DATA / "cost.mdp")
    dump_instance(inst, tmp_path / "x.mdp")
    assert (tmp_path / "x.mdp").read_text() == (DATA / "cost.canonical").read_text()


def _doc(transitions: str, meta: str = "horizon 1\ninitial s0\nbudget 0.1") -> str:
    return f"[states]\ns0\ns1\n[actions]\ngo\n[transitions]\n{transitions}\n[meta]\n{meta}\n"


def test_duplicate_triple_named():
    with pytest.raises(ParseError, match=r"line 8: duplicate transition \(s0, go, s1\)"):
        parse_instance(_doc("s0 go s1 0.5\ns0 go s1 0.5"))


@pytest.mark.parametrize(
    "text, line, pattern",
    [
        (_doc("s0 go s9 1.0"), 7, "unknown state 's9'"),
        (_doc("s0 run s1 1.0"), 7, "unknown action 'run'"),
        (_doc("s0 go s1 half"), 7, "expected a number"),
        (_doc("s0 go s1"), 7, "transition lines"),
        (_doc("s0 go\ns0 go s1 1.0"), 8, "terminal action"),
        (_doc("s0 go s1 1.0", "horizon two\ninitial s0\nbudget 0.1"), 9, "horizon must be an integer"),
        (_doc("s0 go s1 1.0", "horizon 1\ninitial s7\nbudget 0.1"), 10, "unknown initial state"),
        (_doc("s0 go s1 1.0", "horizon 1\ninitial s0\nbudget 0.1\nmode risky"), 12, "unknown mode"),
        (_doc("s0 go s1 1.0", "horizon 1\nhorizon 2\ninitial s0\nbudget 0.1"), 10, "duplicate meta key"),
        ("s0\n[states]\n", 1, "before the first section"),
        ("[stats]\n", 1, "unknown section"),
        ("[states]\ns0\ns0\n", 3, "duplicate state"),
    ],
)
def test_diagnostics_carry_line_numbers(text, line, pattern):
    with pytest.raises(ParseError, match=pattern) as info:
        parse_instance(text)
    assert info.value.line == line and str(info.value).startswith(f"line {line}: ")


def test_missing_meta_key():
    with pytest.raises(ParseError, match="missing meta key 'budget'"):
        parse_instance(_doc("s0 go s1 1.0", "horizon 1\ninitial s0"))


def test_policy_round_trip(tmp_path):
    pi = Policy({("s0", 0): "go", ("s1", 1): "stop"})
    text = serialize_policy(pi)
    assert text == "s0 0 go\ns1 1 stop\n"
    assert parse_policy(text) == pi
    (tmp_path / "p.txt").write_text("# comment\n" + text)
    assert load_policy(tmp_path / "p.txt") == pi


def test_policy_diagnostics():
    with pytest.raises(ParseError, match="line 2: conflicting actions"):
        parse_policy("s0 0 go\ns0 0 stop\n")
    with pytest.raises(ParseError, match="line 1: step must be an integer"):
        parse_policy("s0 zero go\n")
    with pytest.raises(ParseError, match="line 1: policy lines"):
        parse_policy("s0 0\n")
