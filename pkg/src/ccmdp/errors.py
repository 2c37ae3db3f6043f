"""Exception hierarchy shared by every ccmdp module."""

from __future__ import annotations


class CcmdpError(Exception):
    """Base class for all library errors."""


class ValidationError(CcmdpError, ValueError):
    """An instance violates one of the model invariants."""


class ParseError(CcmdpError, ValueError):
    """Malformed instance or policy text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class PolicyError(CcmdpError, ValueError):
    """A policy is undefined or inconsistent on a reachable (state, step) pair."""


class StructureViolation(CcmdpError):
    """Measured transition structure does not satisfy a solver's precondition."""


class Infeasible(CcmdpError):
    """No policy satisfies the risk / cost budget."""


class DemandUnsatisfiable(CcmdpError):
    """A knapsack demand cannot be met by any allocation."""


class DimensionCapExceeded(CcmdpError):
    """A multi-dimensional knapsack has more dimensions than allowed."""


class TooLarge(CcmdpError):
    """An exhaustive routine refused an instance beyond its size guard."""
