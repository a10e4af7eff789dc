"""Ordinal scales, autonomy tiers, and the task assessment value object.

Everything downstream (classification, transitions, planning, the registry)
speaks in these types. The three task dimensions and the capability rating
are ordinal: comparisons use the enum's integer order and nothing else.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Any, Mapping


class GovernanceError(Exception):
    """Base class for domain errors raised by this package."""


def _squash(text: str) -> str:
    return re.sub(r"[^a-z0-9]", "", text.lower())


class _ParseMixin:
    """Shared text parsing for the ordinal enums.

    Accepts member names case-insensitively and ignores separators, so
    "Tier 1 (pilot)", "tier-1-pilot", and "TIER1_PILOT" all parse.
    """

    @classmethod
    def parse(cls, value: Any):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = _squash(value)
            for member in cls:  # type: ignore[attr-defined]
                if _squash(member.name) == key:
                    return member
        raise ValueError(f"not a valid {cls.__name__}: {value!r}")

    @property
    def wire(self) -> str:
        """Lowercase stable name used in logs, config, and API payloads."""
        return self.name.lower()  # type: ignore[attr-defined]


class Structuredness(_ParseMixin, enum.IntEnum):
    """How well-defined the task's inputs, outputs, and success criteria are."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3


class Verifiability(_ParseMixin, enum.IntEnum):
    """How cheaply a human can check the output short of redoing the work."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3


class Consequence(_ParseMixin, enum.IntEnum):
    """Blast radius of an undetected error escaping this task."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3


class CapabilityRating(_ParseMixin, enum.IntEnum):
    """Demonstrated track record of AI on this task type, in this team's context.

    Ratings only advance through recorded evidence (see
    :func:`hybridgov.transitions.derive_capability_rating`); any actor may
    lower one at will, which is recorded as a downgrade event.
    """

    UNPROVEN = 1
    EMERGING = 2
    ESTABLISHED = 3
    MATURE = 4


class AutonomyTier(_ParseMixin, enum.IntEnum):
    """Operating mode granted to AI for a task type.

    The enum order is the governance lattice. ``tier1_pilot`` is a
    probationary shade of tier 1 (unproven capability, training wheels on):
    it sits between ai_restricted and tier1 so comparisons stay meaningful,
    but both shades share tier number 1 for transition stepping.
    """

    AI_RESTRICTED = 0
    TIER1_PILOT = 1
    TIER1 = 2
    TIER2 = 3
    TIER3 = 4
    TIER4 = 5

    @property
    def pilot(self) -> bool:
        return self is AutonomyTier.TIER1_PILOT

    @property
    def number(self) -> int:
        """Tier number 0..4; both tier-1 shades collapse to 1."""
        if self is AutonomyTier.AI_RESTRICTED:
            return 0
        if self in (AutonomyTier.TIER1_PILOT, AutonomyTier.TIER1):
            return 1
        return self.value - 1

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_number(cls, number: int) -> "AutonomyTier":
        """Canonical tier for a tier number; number 1 maps to plain tier 1."""
        try:
            return _BY_NUMBER[number]
        except KeyError:
            raise ValueError(f"tier number out of range: {number}") from None

    def step_down(self, depth: int = 1) -> "AutonomyTier":
        """Demotion target ``depth`` tiers below, clamped at ai_restricted."""
        if depth < 1:
            raise ValueError("demotion depth must be >= 1")
        return AutonomyTier.from_number(max(0, self.number - depth))

    def step_up(self) -> "AutonomyTier":
        """Promotion target one tier above; pilot promotes into tier 2."""
        if self is AutonomyTier.TIER4:
            raise ValueError("tier4 is the top tier")
        return AutonomyTier.from_number(self.number + 1)


_LABELS = {
    AutonomyTier.AI_RESTRICTED: "AI-restricted",
    AutonomyTier.TIER1_PILOT: "Tier 1 (pilot)",
    AutonomyTier.TIER1: "Tier 1",
    AutonomyTier.TIER2: "Tier 2",
    AutonomyTier.TIER3: "Tier 3",
    AutonomyTier.TIER4: "Tier 4",
}

_BY_NUMBER = {
    0: AutonomyTier.AI_RESTRICTED,
    1: AutonomyTier.TIER1,
    2: AutonomyTier.TIER2,
    3: AutonomyTier.TIER3,
    4: AutonomyTier.TIER4,
}


@dataclass(frozen=True)
class TierProfile:
    """Human-readable operating contract for a tier, used in generated docs."""

    tier: AutonomyTier
    name: str
    ai_role: str
    validation_requirement: str
    planning_treatment: str


TIER_PROFILES: dict[AutonomyTier, TierProfile] = {
    AutonomyTier.AI_RESTRICTED: TierProfile(
        AutonomyTier.AI_RESTRICTED,
        "AI-restricted",
        "None; humans execute, AI may at most assist with research",
        "Normal human quality process",
        "Standard human estimate",
    ),
    AutonomyTier.TIER1: TierProfile(
        AutonomyTier.TIER1,
        "Assisted",
        "Supports human execution; human drives every step",
        "Inherent in the human workflow",
        "Standard human estimate; AI acceleration varies by task",
    ),
    AutonomyTier.TIER2: TierProfile(
        AutonomyTier.TIER2,
        "Supervised",
        "Drafts complete outputs against a human-written specification",
        "Full human review of every output before integration",
        "Specification plus generation plus explicit validation budget",
    ),
    AutonomyTier.TIER3: TierProfile(
        AutonomyTier.TIER3,
        "Autonomous-monitored",
        "Executes routinely; humans monitor aggregate signals",
        "Documented sampling plan over outputs",
        "Monitoring overhead plus sampled validation plus exception reserve",
    ),
    AutonomyTier.TIER4: TierProfile(
        AutonomyTier.TIER4,
        "Autonomous-bounded",
        "Operates within hard boundaries; out-of-bounds work is refused",
        "Periodic audit of boundary adherence",
        "Boundary definition plus audit plus exception handling",
    ),
}


@dataclass(frozen=True)
class Assessment:
    """A complete four-dimension assessment of one task type.

    Partial assessments are unrepresentable: all four fields are required
    and must be members of their scales.
    """

    structuredness: Structuredness
    verifiability: Verifiability
    consequence: Consequence
    capability: CapabilityRating

    def __post_init__(self) -> None:
        checks = (
            ("structuredness", self.structuredness, Structuredness),
            ("verifiability", self.verifiability, Verifiability),
            ("consequence", self.consequence, Consequence),
            ("capability", self.capability, CapabilityRating),
        )
        for field_name, value, scale in checks:
            if not isinstance(value, scale):
                raise TypeError(f"{field_name} must be a {scale.__name__}, got {value!r}")

    @classmethod
    def parse(cls, raw: Mapping[str, Any]) -> "Assessment":
        """Build from a payload mapping; raises ValueError on missing or junk fields."""
        missing = [k for k in ("structuredness", "verifiability", "consequence", "capability") if k not in raw]
        if missing:
            raise ValueError(f"assessment missing fields: {', '.join(missing)}")
        return cls(
            structuredness=Structuredness.parse(raw["structuredness"]),
            verifiability=Verifiability.parse(raw["verifiability"]),
            consequence=Consequence.parse(raw["consequence"]),
            capability=CapabilityRating.parse(raw["capability"]),
        )

    def to_payload(self) -> dict[str, str]:
        return {
            "structuredness": self.structuredness.wire,
            "verifiability": self.verifiability.wire,
            "consequence": self.consequence.wire,
            "capability": self.capability.wire,
        }

    def dominates(self, other: "Assessment") -> bool:
        """Component-wise dominance on the delegation-favorable axes.

        True when this assessment is at least as structured, verifiable, and
        capability-proven as ``other``. Consequence is excluded: the decision
        matrix treats it as a separate column, not part of the row order.
        """
        return (
            self.structuredness >= other.structuredness
            and self.verifiability >= other.verifiability
            and self.capability >= other.capability
        )
