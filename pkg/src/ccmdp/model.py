"""Problem representation for finite-horizon (chance-)constrained MDPs.

An instance is a plain container of dictionaries keyed by opaque string
identifiers.  Availability of an action at a state is expressed by the
presence of a ``(state, action)`` key in ``transitions``; an empty successor
list marks a terminal action, which is only legal at the last decision step.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from enum import Enum
from typing import Iterable, Iterator, Mapping

from ccmdp.errors import PolicyError, ValidationError

PROB_TOL = 1e-9
FEAS_TOL = 1e-12

StateAction = tuple[str, str]
Successors = tuple[tuple[str, float], ...]


class Mode(str, Enum):
    CHANCE = "chance"
    COST = "cost"

    @classmethod
    def parse(cls, text: "str | Mode") -> "Mode":
        if isinstance(text, Mode):
            return text
        aliases = {
            "chance": cls.CHANCE,
            "cc": cls.CHANCE,
            "chance-constrained": cls.CHANCE,
            "cost": cls.COST,
            "c": cls.COST,
            "cost-constrained": cls.COST,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown mode {text!r}") from None


@dataclass(frozen=True)
class MdpInstance:
    """A finite-horizon C-MDP or CC-MDP.

    ``budget`` is the risk bound in chance mode and the expected-cost bound in
    cost mode.  Missing utility, cost or risk entries default to zero.
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    transitions: Mapping[StateAction, Successors]
    utility: Mapping[StateAction, float]
    initial: str
    horizon: int
    budget: float
    mode: Mode = Mode.CHANCE
    risk: Mapping[str, float] = field(default_factory=dict)
    cost: Mapping[StateAction, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        object.__setattr__(
            self,
            "transitions",
            {tuple(k): tuple((s, float(p)) for s, p in v) for k, v in self.transitions.items()},
        )

    # lookups ---------------------------------------------------------------

    def u(self, s: str, a: str) -> float:
        return self.utility.get((s, a), 0.0)

    def r(self, s: str) -> float:
        return self.risk.get(s, 0.0)

    def c(self, s: str, a: str) -> float:
        return self.cost.get((s, a), 0.0)

    def available(self, s: str) -> tuple[str, ...]:
        """Actions with a transition entry at ``s``, in instance action order."""
        return tuple(a for a in self.actions if (s, a) in self.transitions)

    @cached_property
    def state_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def action_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.actions)}

    def replace(self, **changes) -> "MdpInstance":
        return dataclasses.replace(self, **changes)


def set_mode(inst: MdpInstance, mode: "Mode | str") -> MdpInstance:
    """Return a copy of ``inst`` solved under the given constraint mode."""
    return inst.replace(mode=Mode.parse(mode))


def forward_levels(inst: MdpInstance, allowed=None) -> list[tuple[str, ...]]:
    """States reachable at each step 0..h, in instance state order.

    ``allowed`` optionally maps ``(k, state)`` to the actions usable there.
    """
    order = inst.state_index
    levels = [(inst.initial,)]
    for k in range(inst.horizon):
        nxt: set[str] = set()
        for s in levels[-1]:
            acts = allowed.get((k, s), ()) if allowed is not None else inst.available(s)
            for a in acts:
                nxt.update(t for t, p in inst.transitions[(s, a)] if p > 0)
        levels.append(tuple(sorted(nxt, key=order.__getitem__)))
    return levels


def validate_instance(inst: MdpInstance) -> MdpInstance:
    """Return ``inst`` unchanged if every model invariant holds.

    Raises :class:`ValidationError` describing the first violation found.
    """
    if len(set(inst.states)) != len(inst.states):
        raise ValidationError("duplicate state identifiers")
    if len(set(inst.actions)) != len(inst.actions):
        raise ValidationError("duplicate action identifiers")
    known_s = set(inst.states)
    known_a = set(inst.actions)
    if not isinstance(inst.horizon, int) or inst.horizon < 1:
        raise ValidationError(f"horizon must be a positive integer, got {inst.horizon!r}")
    if math.isnan(inst.budget) or inst.budget < 0:
        raise ValidationError(f"budget must be non-negative, got {inst.budget}")
    if inst.initial not in known_s:
        raise ValidationError(f"unknown initial state {inst.initial!r}")

    for (s, a), succ in inst.transitions.items():
        if s not in known_s:
            raise ValidationError(f"unknown state {s!r} in transition ({s}, {a})")
        if a not in known_a:
            raise ValidationError(f"unknown action {a!r} in transition ({s}, {a})")
        seen = set()
        for t, p in succ:
            if t not in known_s:
                raise ValidationError(f"unknown successor state {t!r} in transition ({s}, {a})")
            if t in seen:
                raise ValidationError(f"duplicate successor {t!r} in transition ({s}, {a})")
            seen.add(t)
            if not (0.0 <= p <= 1.0):
                raise ValidationError(f"probability {p} out of [0, 1] in transition ({s}, {a}, {t})")
        if succ:
            total = math.fsum(p for _, p in succ)
            if abs(total - 1.0) > PROB_TOL:
                raise ValidationError(f"probabilities sum to {total:.12g} for ({s}, {a})")

    for key, val in inst.utility.items():
        if key not in inst.transitions:
            raise ValidationError(f"utility given for unavailable pair {key}")
        if not val >= 0:
            raise ValidationError(f"negative utility {val} for {key}")
        if math.isinf(val):
            raise ValidationError(f"non-finite utility for {key}")
    for key, val in inst.cost.items():
        if key not in inst.transitions:
            raise ValidationError(f"cost given for unavailable pair {key}")
        if not val >= 0:
            raise ValidationError(f"negative cost {val} for {key}")
        if math.isinf(val):
            raise ValidationError(f"non-finite cost for {key}")
    for s, val in inst.risk.items():
        if s not in known_s:
            raise ValidationError(f"risk given for unknown state {s!r}")
        if not (0.0 <= val <= 1.0):
            raise ValidationError(f"risk {val} of state {s!r} out of [0, 1]")

    levels = forward_levels(inst)
    h = inst.horizon
    for k in range(h):
        for s in levels[k]:
            acts = inst.available(s)
            if not acts:
                raise ValidationError(f"state {s!r} reachable at step {k} has no actions")
            if k < h - 1:
                for a in acts:
                    if not any(p > 0 for _, p in inst.transitions[(s, a)]):
                        raise ValidationError(
                            f"terminal action {a!r} at state {s!r} reachable at step {k} < h-1"
                        )
    return inst


@dataclass(frozen=True)
class Policy:
    """Deterministic time-dependent policy: ``(state, k) -> action``."""

    assignment: Mapping[tuple[str, int], str]

    def __call__(self, s: str, k: int) -> str:
        try:
            return self.assignment[(s, k)]
        except KeyError:
            raise PolicyError(f"policy undefined at state {s!r}, step {k}") from None

    def __contains__(self, key) -> bool:
        return key in self.assignment

    def __len__(self) -> int:
        return len(self.assignment)

    def __iter__(self) -> Iterator[tuple[tuple[str, int], str]]:
        return iter(sorted(self.assignment.items(), key=lambda kv: (kv[0][1], kv[0][0])))

    @classmethod
    def from_items(cls, items: Iterable[tuple[str, int, str]]) -> "Policy":
        out: dict[tuple[str, int], str] = {}
        for s, k, a in items:
            if out.setdefault((s, int(k)), a) != a:
                raise PolicyError(f"conflicting actions for state {s!r} at step {k}")
        return cls(out)


@dataclass(frozen=True)
class EvalReport:
    value: float
    risk_or_cost: float
    feasible: bool
    mode: Mode = Mode.CHANCE
