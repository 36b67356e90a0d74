"""Shared failure records for the witness verification pipelines.

Every verification pass computes exact rational quantities and compares
them against exact rational targets; a failed comparison is captured as
a CheckFailure rather than a bare AssertionError so callers (CLI, tests)
can render the offending numbers.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .rational import format_rational


@dataclass(frozen=True)
class CheckFailure:
    """One failed inequality: `name` at stage/row `j`, with both sides."""

    module: str
    name: str
    j: int
    lhs: Fraction
    rhs: Fraction
    relation: str = "<="

    def __str__(self) -> str:
        return (f"{self.module} check '{self.name}' failed at j={self.j}: "
                f"{format_rational(self.lhs)} {self.relation} "
                f"{format_rational(self.rhs)} does not hold")


class VerificationError(Exception):
    """Raised when a witness fails one or more exact re-checks."""

    def __init__(self, failures):
        self.failures = list(failures)
        head = str(self.failures[0]) if self.failures else "verification failed"
        more = len(self.failures) - 1
        if more > 0:
            head += f" (+{more} more)"
        super().__init__(head)
