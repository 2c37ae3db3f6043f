"""Line-oriented text format for instances and policies.

An instance document has sections ``[states]``, ``[actions]``,
``[transitions]``, ``[utility]``, ``[risk]``, ``[cost]`` and ``[meta]``::

    [states]
    s0
    s1
    [actions]
    go
    [transitions]
    s0 go s1 1.0      # s a s' p
    s1 go             # terminal action (no successors)
    [utility]
    s0 go 5.0
    [risk]
    s1 0.1
    [meta]
    horizon 2
    initial s0
    budget 0.2
    mode chance

``#`` starts a comment.  Policies are ``s k a`` lines.
"""

from __future__ import annotations

import math
from pathlib import Path

from ccmdp.errors import ParseError
from ccmdp.model import MdpInstance, Mode, Policy

SECTIONS = ("states", "actions", "transitions", "utility", "risk", "cost", "meta")


def _number(tok: str, line: int, what: str) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise ParseError(f"{what}: expected a number, got {tok!r}", line) from None
    if math.isnan(x):
        raise ParseError(f"{what}: NaN is not allowed", line)
    return x


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield no, body


def parse_instance(text: str) -> MdpInstance:
    """Parse an instance document; errors carry the offending line number."""
    section = None
    states: list[str] = []
    actions: list[str] = []
    trans: dict[tuple[str, str], list[tuple[str, float]]] = {}
    seen_triples: set = set()
    utility: dict = {}
    risk: dict = {}
    cost: dict = {}
    meta: dict[str, tuple[str, int]] = {}
    state_set: set[str] = set()
    action_set: set[str] = set()

    def known(tok, pool, kind, no):
        if tok not in pool:
            raise ParseError(f"unknown {kind} {tok!r}", no)

    for no, body in _lines(text):
        if body.startswith("["):
            if not body.endswith("]") or body[1:-1].strip() not in SECTIONS:
                raise ParseError(f"unknown section header {body!r}", no)
            section = body[1:-1].strip()
            continue
        toks = body.split()
        if section is None:
            raise ParseError("content before the first section header", no)
        if section in ("states", "actions"):
            if len(toks) != 1:
                raise ParseError(f"expected one identifier per line in [{section}]", no)
            pool, listing = (state_set, states) if section == "states" else (action_set, actions)
            if toks[0] in pool:
                raise ParseError(f"duplicate {section[:-1]} {toks[0]!r}", no)
            pool.add(toks[0])
            listing.append(toks[0])
        elif section == "transitions":
            if len(toks) not in (2, 4):
                raise ParseError("transition lines are 's a s2 p' or 's a' for a terminal action", no)
            s, a = toks[0], toks[1]
            known(s, state_set, "state", no)
            known(a, action_set, "action", no)
            entry = trans.setdefault((s, a), [])
            if len(toks) == 2:
                if (s, a, None) in seen_triples or entry:
                    raise ParseError(f"terminal action ({s}, {a}) conflicts with other transition lines", no)
                seen_triples.add((s, a, None))
                continue
            if (s, a, None) in seen_triples:
                raise ParseError(f"terminal action ({s}, {a}) conflicts with other transition lines", no)
            t = toks[2]
            known(t, state_set, "state", no)
            if (s, a, t) in seen_triples:
                raise ParseError(f"duplicate transition ({s}, {a}, {t})", no)
            seen_triples.add((s, a, t))
            entry.append((t, _number(toks[3], no, "probability")))
        elif section in ("utility", "cost"):
            if len(toks) != 3:
                raise ParseError(f"[{section}] lines are 's a value'", no)
            known(toks[0], state_set, "state", no)
            known(toks[1], action_set, "action", no)
            target = utility if section == "utility" else cost
            key = (toks[0], toks[1])
            if key in target:
                raise ParseError(f"duplicate {section} entry {key}", no)
            target[key] = _number(toks[2], no, section)
        elif section == "risk":
            if len(toks) != 2:
                raise ParseError("[risk] lines are 's value'", no)
            known(toks[0], state_set, "state", no)
            if toks[0] in risk:
                raise ParseError(f"duplicate risk entry for {toks[0]!r}", no)
            risk[toks[0]] = _number(toks[1], no, "risk")
        else:
            if len(toks) != 2 or toks[0] not in ("horizon", "initial", "budget", "mode"):
                raise ParseError("[meta] lines are 'horizon N', 'initial s', 'budget x' or 'mode chance|cost'", no)
            if toks[0] in meta:
                raise ParseError(f"duplicate meta key {toks[0]!r}", no)
            meta[toks[0]] = (toks[1], no)

    for key in ("horizon", "initial", "budget"):
        if key not in meta:
            raise ParseError(f"missing meta key {key!r}")
    hv, hno = meta["horizon"]
    try:
        horizon = int(hv)
    except ValueError:
        raise ParseError(f"horizon must be an integer, got {hv!r}", hno) from None
    init, ino = meta["initial"]
    known(init, state_set, "initial state", ino)
    bv, bno = meta["budget"]
    budget = _number(bv, bno, "budget")
    mode = Mode.CHANCE
    if "mode" in meta:
        try:
            mode = Mode.parse(meta["mode"][0])
        except ValueError as exc:
            raise ParseError(str(exc), meta["mode"][1]) from None
    return MdpInstance(
        states=states,
        actions=actions,
        transitions={k: tuple(v) for k, v in trans.items()},
        utility=utility,
        initial=init,
        horizon=horizon,
        budget=budget,
        mode=mode,
        risk=risk,
        cost=cost,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_instance(inst: MdpInstance) -> str:
    """Canonical text: identifiers sorted, numbers in shortest round-trip form."""
    out = ["[states]", *sorted(inst.states), "[actions]", *sorted(inst.actions), "[transitions]"]
    for (s, a) in sorted(inst.transitions):
        succ = inst.transitions[(s, a)]
        if not succ:
            out.append(f"{s} {a}")
        for t, p in sorted(succ):
            out.append(f"{s} {a} {t} {_fmt(p)}")
    out.append("[utility]")
    out.extend(f"{s} {a} {_fmt(v)}" for (s, a), v in sorted(inst.utility.items()))
    out.append("[risk]")
    out.extend(f"{s} {_fmt(v)}" for s, v in sorted(inst.risk.items()))
    out.append("[cost]")
    out.extend(f"{s} {a} {_fmt(v)}" for (s, a), v in sorted(inst.cost.items()))
    out += [
        "[meta]",
        f"horizon {inst.horizon}",
        f"initial {inst.initial}",
        f"budget {_fmt(inst.budget)}",
        f"mode {inst.mode.value}",
    ]
    return "\n".join(out) + "\n"


def canonical(text: str) -> str:
    return serialize_instance(parse_instance(text))


def load_instance(path: "str | Path") -> MdpInstance:
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def dump_instance(inst: MdpInstance, path: "str | Path") -> None:
    Path(path).write_text(serialize_instance(inst), encoding="utf-8")


def parse_policy(text: str) -> Policy:
    items = {}
    for no, body in _lines(text):
        toks = body.split()
        if len(toks) != 3:
            raise ParseError("policy lines are 's k a'", no)
        try:
            k = int(toks[1])
        except ValueError:
            raise ParseError(f"step must be an integer, got {toks[1]!r}", no) from None
        if items.setdefault((toks[0], k), toks[2]) != toks[2]:
            raise ParseError(f"conflicting actions for state {toks[0]!r} at step {k}", no)
    return Policy(items)


def serialize_policy(pi: Policy) -> str:
    return "".join(f"{s} {k} {a}\n" for (s, k), a in pi)


def load_policy(path: "str | Path") -> Policy:
    return parse_policy(Path(path).read_text(encoding="utf-8"))


def dump_policy(pi: Policy, path: "str | Path") -> None:
    Path(path).write_text(serialize_policy(pi), encoding="utf-8")
