"""Scale and tier primitives."""

import pytest

from hybridgov.tiers import (
    Assessment,
    AutonomyTier,
    CapabilityRating,
    Consequence,
    Structuredness,
    Verifiability,
)


def test_scales_are_ordered():
    assert Structuredness.LOW < Structuredness.MEDIUM < Structuredness.HIGH
    assert Verifiability.LOW < Verifiability.MEDIUM < Verifiability.HIGH
    assert Consequence.LOW < Consequence.MEDIUM < Consequence.HIGH
    assert (
        CapabilityRating.UNPROVEN
        < CapabilityRating.EMERGING
        < CapabilityRating.ESTABLISHED
        < CapabilityRating.MATURE
    )


def test_tier_lattice_order():
    order = [
        AutonomyTier.AI_RESTRICTED,
        AutonomyTier.TIER1_PILOT,
        AutonomyTier.TIER1,
        AutonomyTier.TIER2,
        AutonomyTier.TIER3,
        AutonomyTier.TIER4,
    ]
    assert order == sorted(AutonomyTier)
    for lower, higher in zip(order, order[1:]):
        assert lower < higher


def test_pilot_flag_only_on_tier1():
    assert AutonomyTier.TIER1_PILOT.pilot
    for tier in AutonomyTier:
        if tier is not AutonomyTier.TIER1_PILOT:
            assert not tier.pilot
    # both tier-1 shades share the same step number
    assert AutonomyTier.TIER1_PILOT.number == AutonomyTier.TIER1.number == 1


def test_tier_numbers():
    assert AutonomyTier.AI_RESTRICTED.number == 0
    assert AutonomyTier.TIER2.number == 2
    assert AutonomyTier.TIER3.number == 3
    assert AutonomyTier.TIER4.number == 4
    for n in range(5):
        assert AutonomyTier.from_number(n).number == n
    with pytest.raises(ValueError):
        AutonomyTier.from_number(5)


def test_step_down_clamps_at_restricted():
    assert AutonomyTier.TIER3.step_down() is AutonomyTier.TIER2
    assert AutonomyTier.TIER3.step_down(2) is AutonomyTier.TIER1
    assert AutonomyTier.TIER1.step_down() is AutonomyTier.AI_RESTRICTED
    assert AutonomyTier.TIER1_PILOT.step_down() is AutonomyTier.AI_RESTRICTED
    assert AutonomyTier.TIER2.step_down(99) is AutonomyTier.AI_RESTRICTED
    with pytest.raises(ValueError):
        AutonomyTier.TIER2.step_down(0)


def test_step_up():
    assert AutonomyTier.TIER1.step_up() is AutonomyTier.TIER2
    assert AutonomyTier.TIER1_PILOT.step_up() is AutonomyTier.TIER2
    assert AutonomyTier.TIER3.step_up() is AutonomyTier.TIER4
    with pytest.raises(ValueError):
        AutonomyTier.TIER4.step_up()


def test_parse_accepts_label_variants():
    assert AutonomyTier.parse("Tier 1 (pilot)") is AutonomyTier.TIER1_PILOT
    assert AutonomyTier.parse("tier-3") is AutonomyTier.TIER3
    assert AutonomyTier.parse("AI-restricted") is AutonomyTier.AI_RESTRICTED
    assert Structuredness.parse("High") is Structuredness.HIGH
    assert CapabilityRating.parse("established") is CapabilityRating.ESTABLISHED
    with pytest.raises(ValueError):
        AutonomyTier.parse("tier 9")
    with pytest.raises(ValueError):
        Consequence.parse("")


def test_wire_names_round_trip():
    for scale in (Structuredness, Verifiability, Consequence, CapabilityRating, AutonomyTier):
        for member in scale:
            assert scale.parse(member.wire) is member


def test_assessment_requires_all_dimensions():
    with pytest.raises(TypeError):
        Assessment("high", Verifiability.HIGH, Consequence.LOW, CapabilityRating.MATURE)
    with pytest.raises(ValueError):
        Assessment.parse({"structuredness": "high", "verifiability": "high", "consequence": "low"})


def test_assessment_payload_round_trip():
    a = Assessment(
        Structuredness.MEDIUM,
        Verifiability.HIGH,
        Consequence.LOW,
        CapabilityRating.EMERGING,
    )
    assert Assessment.parse(a.to_payload()) == a


def test_assessment_dominance_ignores_consequence():
    strong = Assessment(
        Structuredness.HIGH, Verifiability.HIGH, Consequence.HIGH, CapabilityRating.MATURE
    )
    weak = Assessment(
        Structuredness.MEDIUM, Verifiability.MEDIUM, Consequence.LOW, CapabilityRating.EMERGING
    )
    assert strong.dominates(weak)
    assert not weak.dominates(strong)
    assert strong.dominates(strong)
