"""Decision matrix tests.

The oracle here is deliberately independent of the implementation: a
second literal copy of the published cells plus a one-pass dominance scan
(reflexive dominance makes exact matches fall out of the same loop). The
implementation resolves rules in order and splits exact rows from the
closure, so agreement between the two is meaningful.
"""

import itertools

from hybridgov.decision import classify, enumerate_matrix
from hybridgov.tiers import (
    Assessment,
    AutonomyTier,
    CapabilityRating,
    Consequence,
    Structuredness,
    Verifiability,
)

# Numeric encoding for the oracle: s/v in 1..3, d in 1..4, c in 1..3.
# Cells per row are (low, medium, high) consequence.
_ORACLE_ROWS = {
    (3, 3, 4): ("tier4", "tier3", "tier2"),
    (3, 3, 3): ("tier3", "tier2", "tier2"),
    (3, 2, 3): ("tier3", "tier2", "tier1"),
    (2, 2, 3): ("tier2", "tier2", "tier1"),
    (2, 2, 2): ("tier2", "tier1", "ai_restricted"),
}

_TIER_ORDER = ["ai_restricted", "tier1_pilot", "tier1", "tier2", "tier3", "tier4"]


def oracle_tier(s: int, v: int, c: int, d: int) -> str:
    if d == 1:
        return "ai_restricted" if c == 3 else "tier1_pilot"
    if s == 1 or v == 1:
        return "ai_restricted" if c == 3 else "tier1"
    candidates = [
        cells[c - 1]
        for (rs, rv, rd), cells in _ORACLE_ROWS.items()
        if s >= rs and v >= rv and d >= rd
    ]
    assert candidates, f"no dominated row for s={s} v={v} d={d}"
    return max(candidates, key=_TIER_ORDER.index)


def _assess(s: int, v: int, c: int, d: int) -> Assessment:
    return Assessment(Structuredness(s), Verifiability(v), Consequence(c), CapabilityRating(d))


def test_published_exact_cells():
    for (s, v, d), cells in _ORACLE_ROWS.items():
        for c, expected in zip((1, 2, 3), cells):
            result = classify(_assess(s, v, c, d))
            assert result.tier.wire == expected, (s, v, c, d)
            assert result.matched_rule.startswith("matrix-row:")


def test_published_low_dimension_row():
    # Any assessment with low structuredness or low verifiability (capability
    # proven at all) lands on tier1/tier1/ai_restricted by consequence.
    for s, v in itertools.product((1, 2, 3), repeat=2):
        if s != 1 and v != 1:
            continue
        for d in (2, 3, 4):
            assert classify(_assess(s, v, 1, d)).tier.wire == "tier1"
            assert classify(_assess(s, v, 2, d)).tier.wire == "tier1"
            assert classify(_assess(s, v, 3, d)).tier.wire == "ai_restricted"


def test_published_unproven_row():
    for s, v in itertools.product((1, 2, 3), repeat=2):
        low = classify(_assess(s, v, 1, 1))
        med = classify(_assess(s, v, 2, 1))
        high = classify(_assess(s, v, 3, 1))
        assert low.tier is AutonomyTier.TIER1_PILOT
        assert low.tier.pilot
        assert med.tier is AutonomyTier.TIER1_PILOT
        assert high.tier is AutonomyTier.AI_RESTRICTED
        assert low.matched_rule == "capability-unproven"


def test_unproven_outranks_low_dimension_rule():
    # Both rules could claim (low, low, *, unproven); resolution order says
    # the pilot rule wins below high consequence.
    result = classify(_assess(1, 1, 1, 1))
    assert result.tier is AutonomyTier.TIER1_PILOT
    assert result.matched_rule == "capability-unproven"


def test_full_enumeration_matches_oracle():
    entries = enumerate_matrix()
    assert len(entries) == 108
    seen = set()
    for entry in entries:
        a = entry.assessment
        key = (a.structuredness, a.verifiability, a.consequence, a.capability)
        assert key not in seen
        seen.add(key)
        expected = oracle_tier(
            int(a.structuredness), int(a.verifiability), int(a.consequence), int(a.capability)
        )
        assert entry.result.tier.wire == expected, key
    assert len(seen) == 108


def test_every_result_names_a_rule():
    known_prefixes = (
        "capability-unproven",
        "low-structure-or-verifiability",
        "matrix-row:",
        "dominance-closure:",
    )
    for entry in enumerate_matrix():
        assert entry.result.matched_rule.startswith(known_prefixes)
        assert entry.result.rationale


def test_dominance_closure_key_cells():
    # (high, high, emerging): dominates only the (medium, medium, emerging)
    # row, so it inherits tier2 / tier1 / ai_restricted.
    assert classify(_assess(3, 3, 1, 2)).tier.wire == "tier2"
    assert classify(_assess(3, 3, 2, 2)).tier.wire == "tier1"
    assert classify(_assess(3, 3, 3, 2)).tier.wire == "ai_restricted"
    # (high, high, low-consequence, established) is exact; the medium-verif
    # variant at mature must not drop below the established row it dominates.
    assert classify(_assess(3, 2, 1, 4)).tier.wire == "tier3"
    result = classify(_assess(3, 3, 1, 2))
    assert result.matched_rule == "dominance-closure:medium-medium-emerging"


def test_monotone_over_full_lattice():
    # More structure, more verifiability, more proven capability, and less
    # consequence must never reduce autonomy. Exhaustive over all 108 x 108
    # comparable pairs.
    entries = enumerate_matrix()
    by_key = {
        (
            int(e.assessment.structuredness),
            int(e.assessment.verifiability),
            int(e.assessment.consequence),
            int(e.assessment.capability),
        ): e.result.tier
        for e in entries
    }
    for (s1, v1, c1, d1), t1 in by_key.items():
        for (s2, v2, c2, d2), t2 in by_key.items():
            if s1 >= s2 and v1 >= v2 and d1 >= d2 and c1 <= c2:
                assert t1 >= t2, ((s1, v1, c1, d1), (s2, v2, c2, d2))


def test_classification_is_deterministic():
    a = _assess(3, 2, 2, 4)
    assert classify(a) == classify(a)
    first = [e.result.tier for e in enumerate_matrix()]
    second = [e.result.tier for e in enumerate_matrix()]
    assert first == second
