"""Delegation decision matrix: assessment in, autonomy tier out.

The matrix is resolved in a fixed rule order so every one of the 108
possible assessments gets exactly one answer:

1. Unproven capability forces a tier 1 pilot (AI-restricted when
   consequence is high). Nothing ships on faith.
2. Low structuredness or low verifiability caps autonomy at tier 1
   (AI-restricted when consequence is high): if you cannot specify it or
   cannot check it, you cannot delegate it.
3. An exact row of the published matrix, when one matches.
4. Dominance closure: take the highest tier granted to any published row
   this assessment dominates component-wise, at the same consequence
   level. Dominance never grants more autonomy than the evidence below
   it, so the result is monotone by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .tiers import (
    Assessment,
    AutonomyTier,
    CapabilityRating,
    Consequence,
    Structuredness,
    Verifiability,
)

_S = Structuredness
_V = Verifiability
_C = Consequence
_D = CapabilityRating
_T = AutonomyTier

# Fully specified matrix rows: (structuredness, verifiability, capability)
# mapped to the tier per consequence column (low, medium, high).
_EXACT_ROWS: dict[tuple[Structuredness, Verifiability, CapabilityRating], tuple[AutonomyTier, AutonomyTier, AutonomyTier]] = {
    (_S.HIGH, _V.HIGH, _D.MATURE): (_T.TIER4, _T.TIER3, _T.TIER2),
    (_S.HIGH, _V.HIGH, _D.ESTABLISHED): (_T.TIER3, _T.TIER2, _T.TIER2),
    (_S.HIGH, _V.MEDIUM, _D.ESTABLISHED): (_T.TIER3, _T.TIER2, _T.TIER1),
    (_S.MEDIUM, _V.MEDIUM, _D.ESTABLISHED): (_T.TIER2, _T.TIER2, _T.TIER1),
    (_S.MEDIUM, _V.MEDIUM, _D.EMERGING): (_T.TIER2, _T.TIER1, _T.AI_RESTRICTED),
}

_CONSEQUENCE_INDEX = {_C.LOW: 0, _C.MEDIUM: 1, _C.HIGH: 2}


def _row_id(key: tuple[Structuredness, Verifiability, CapabilityRating]) -> str:
    s, v, d = key
    return f"{s.wire}-{v.wire}-{d.wire}"


@dataclass(frozen=True)
class ClassificationResult:
    """Outcome of running one assessment through the matrix."""

    tier: AutonomyTier
    matched_rule: str
    rationale: str

    def to_payload(self) -> dict[str, str]:
        return {
            "tier": self.tier.wire,
            "matched_rule": self.matched_rule,
            "rationale": self.rationale,
        }


def classify(assessment: Assessment, policy: Optional[object] = None) -> ClassificationResult:
    """Resolve an assessment to its default autonomy tier.

    ``policy`` is accepted for interface stability and is unused: the
    bundled matrix does not depend on transition thresholds.
    """
    del policy
    s, v = assessment.structuredness, assessment.verifiability
    c, d = assessment.consequence, assessment.capability
    col = _CONSEQUENCE_INDEX[c]

    if d is _D.UNPROVEN:
        if c is _C.HIGH:
            return ClassificationResult(
                _T.AI_RESTRICTED,
                "capability-unproven",
                "Unproven capability with high consequence: humans execute.",
            )
        return ClassificationResult(
            _T.TIER1_PILOT,
            "capability-unproven",
            "Unproven capability: tier 1 pilot until evidence accumulates.",
        )

    if s is _S.LOW or v is _V.LOW:
        dim = "structuredness" if s is _S.LOW else "verifiability"
        if c is _C.HIGH:
            return ClassificationResult(
                _T.AI_RESTRICTED,
                "low-structure-or-verifiability",
                f"Low {dim} with high consequence: humans execute.",
            )
        return ClassificationResult(
            _T.TIER1,
            "low-structure-or-verifiability",
            f"Low {dim}: AI assists but the human drives.",
        )

    key = (s, v, d)
    if key in _EXACT_ROWS:
        tier = _EXACT_ROWS[key][col]
        return ClassificationResult(
            tier,
            f"matrix-row:{_row_id(key)}",
            f"Published matrix row at {c.wire} consequence.",
        )

    best: Optional[AutonomyTier] = None
    best_key: Optional[tuple[Structuredness, Verifiability, CapabilityRating]] = None
    for row_key, cells in _EXACT_ROWS.items():
        rs, rv, rd = row_key
        if rs <= s and rv <= v and rd <= d:
            tier = cells[col]
            if best is None or tier > best:
                best, best_key = tier, row_key
    # Rules 1 and 2 exclude low rows and unproven capability, so every
    # remaining assessment dominates at least (medium, medium, emerging).
    assert best is not None and best_key is not None
    return ClassificationResult(
        best,
        f"dominance-closure:{_row_id(best_key)}",
        f"Dominates published row {_row_id(best_key)}; inherits its {c.wire}-consequence tier.",
    )


@dataclass(frozen=True)
class MatrixEntry:
    assessment: Assessment
    result: ClassificationResult


def enumerate_matrix(policy: Optional[object] = None) -> list[MatrixEntry]:
    """All 108 assessments with their resolved tiers, in scale order."""
    entries = []
    for s, v, c, d in itertools.product(_S, _V, _C, _D):
        assessment = Assessment(s, v, c, d)
        entries.append(MatrixEntry(assessment, classify(assessment, policy)))
    return entries
