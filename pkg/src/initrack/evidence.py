"""Mass-function algebra over the two-role frame {speaker, hearer}.

Belief about who holds an initiative is kept as a basic probability
assignment with three components: mass on the speaker, mass on the hearer,
and uncommitted mass on the whole frame.  Evidence is pooled with
Dempster's rule of combination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Iterable

SUM_TOLERANCE = 1e-9


class TotalConflictError(ValueError):
    """Raised when two mass functions are totally conflicting (conflict = 1)."""


class Role(Enum):
    SPEAKER = "speaker"
    HEARER = "hearer"

    def other(self) -> "Role":
        return Role.HEARER if self is Role.SPEAKER else Role.SPEAKER

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MassFunction:
    """Basic probability assignment over {speaker}, {hearer} and the frame.

    `theta` is the mass left on the whole frame, i.e. belief committed to
    neither role.  Components are non-negative and sum to 1; the empty set
    carries no mass.
    """

    speaker: float
    hearer: float
    theta: float

    def __post_init__(self) -> None:
        for name in ("speaker", "hearer", "theta"):
            value = getattr(self, name)
            if math.isnan(value) or value < 0.0:
                raise ValueError(f"mass on {name} must be >= 0, got {value!r}")
        total = self.speaker + self.hearer + self.theta
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"masses must sum to 1, got {total!r}")

    def mass(self, role: Role) -> float:
        return self.speaker if role is Role.SPEAKER else self.hearer


def vacuous() -> MassFunction:
    """The no-evidence assignment: all mass uncommitted."""
    return MassFunction(0.0, 0.0, 1.0)


def bayesian(x: float) -> MassFunction:
    """All mass split between the roles: x on the speaker, 1 - x on the hearer."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"bayesian index requires 0 <= x <= 1, got {x!r}")
    return MassFunction(x, 1.0 - x, 0.0)


def combine(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """Pool two assignments with Dempster's rule.

    Masses of intersecting focal elements multiply and accumulate; the
    speaker/hearer cross terms are conflict and the remainder is
    renormalized by 1 - conflict.  Total conflict has no defined result and
    raises TotalConflictError.
    """
    conflict = m1.speaker * m2.hearer + m1.hearer * m2.speaker
    norm = 1.0 - conflict
    if norm <= 0.0:
        raise TotalConflictError("cannot combine totally conflicting mass functions")
    speaker = (m1.speaker * m2.speaker + m1.speaker * m2.theta + m1.theta * m2.speaker) / norm
    hearer = (m1.hearer * m2.hearer + m1.hearer * m2.theta + m1.theta * m2.hearer) / norm
    theta = (m1.theta * m2.theta) / norm
    return MassFunction(speaker, hearer, theta)


def combine_all(ms: Iterable[MassFunction]) -> MassFunction:
    """Left-to-right fold of `combine`; a singleton input is returned unchanged."""
    items = list(ms)
    if not items:
        raise ValueError("combine_all requires at least one mass function")
    return reduce(combine, items)


def predicted_holder(m: MassFunction) -> Role:
    """The better-supported role; a tie goes to the speaker."""
    return Role.SPEAKER if m.speaker >= m.hearer else Role.HEARER
