import pytest
from hypothesis import given, strategies as st

from hybridgov.checklists import BUNDLED_TEMPLATES
from hybridgov.quality import (
    CycleMetrics,
    DetectionPoint,
    Finding,
    InjectionCampaign,
    LintConfig,
    PlantedError,
    QualityError,
    SamplingBasis,
    SamplingDefaults,
    SamplingPlan,
    Severity,
    ValidationOutcome,
    adjust_sampling,
    checklist_coverage_ok,
    compute_cycle_metrics,
    erosion_check,
    lint,
    run_injection_audit,
    set_sqc_rate,
)
from hybridgov.registry import RegistryStore
from hybridgov.transitions import CycleSummary, TransitionPolicy
from hybridgov.tiers import AutonomyTier

TS = "2026-08-01T10:00:00Z"
POLICY = TransitionPolicy.default()
DEFAULTS = SamplingDefaults()


def clean_cycle(i, tier=AutonomyTier.TIER3):
    return CycleSummary(
        cycle_index=i,
        tier_during_cycle=tier,
        outputs_validated=5,
        outputs_with_major_or_critical=0,
        critical_count=0,
    )


def dirty_cycle(i, tier=AutonomyTier.TIER3):
    return CycleSummary(
        cycle_index=i,
        tier_during_cycle=tier,
        outputs_validated=5,
        outputs_with_major_or_critical=2,
        critical_count=0,
    )


# -- severity and outcomes


def test_severity_ordering_and_parse():
    assert Severity.MINOR < Severity.MAJOR < Severity.CRITICAL
    assert Severity.parse("Major") is Severity.MAJOR
    with pytest.raises(ValueError):
        Severity.parse("catastrophic")


def test_outcome_first_pass_contradiction():
    outcome = ValidationOutcome(
        item_id="it-1",
        reviewer="dev2",
        cycle=1,
        detected_in=DetectionPoint.REVIEW,
        first_pass_accept=True,
        findings=(Finding(Severity.MAJOR, "security"),),
    )
    with pytest.raises(QualityError):
        outcome.validate()


def test_outcome_minor_finding_can_still_first_pass():
    outcome = ValidationOutcome(
        item_id="it-1",
        reviewer="dev2",
        cycle=1,
        detected_in=DetectionPoint.REVIEW,
        first_pass_accept=True,
        findings=(Finding(Severity.MINOR, "tone_register", "stiff phrasing"),),
    )
    outcome.validate()
    assert outcome.worst_severity is Severity.MINOR


def test_outcome_payload_round_trip():
    outcome = ValidationOutcome(
        item_id="it-9",
        reviewer="dev2",
        cycle=3,
        detected_in=DetectionPoint.SAMPLING,
        first_pass_accept=False,
        findings=(Finding(Severity.CRITICAL, "hallucinated_interfaces", "fake client"),),
        checklist_results={"security": "pass"},
        review_minutes=42.5,
    )
    assert ValidationOutcome.from_payload(outcome.to_payload()) == outcome


# -- sampling adjustments


def test_escape_raises_rate_one_step():
    plan = SamplingPlan.initial("api", DEFAULTS)
    adjusted = adjust_sampling(plan, [], escape_count=1, defaults=DEFAULTS, policy=POLICY, cycle=5)
    assert adjusted.rate == pytest.approx(0.30)
    assert adjusted.basis is SamplingBasis.ADJUSTMENT
    assert len(adjusted.history) == 1
    assert "escaped" in adjusted.history[0].reason


def test_rate_caps_at_full_review():
    plan = SamplingPlan("api", rate=0.95)
    adjusted = adjust_sampling(plan, [], escape_count=2, defaults=DEFAULTS, policy=POLICY, cycle=5)
    assert adjusted.rate == 1.0
    # already at the cap: no-op, same object back
    again = adjust_sampling(adjusted, [], escape_count=1, defaults=DEFAULTS, policy=POLICY, cycle=6)
    assert again is adjusted


def test_three_clean_cycles_lower_rate():
    plan = SamplingPlan.initial("api", DEFAULTS)
    cycles = [clean_cycle(i) for i in (1, 2, 3)]
    adjusted = adjust_sampling(plan, cycles, escape_count=0, defaults=DEFAULTS, policy=POLICY, cycle=4)
    assert adjusted.rate == pytest.approx(0.10)


def test_rate_floors_at_minimum():
    plan = SamplingPlan("api", rate=0.10)
    cycles = [clean_cycle(i) for i in (1, 2, 3)]
    adjusted = adjust_sampling(plan, cycles, escape_count=0, defaults=DEFAULTS, policy=POLICY, cycle=4)
    assert adjusted is plan


def test_two_clean_cycles_are_not_enough():
    plan = SamplingPlan.initial("api", DEFAULTS)
    cycles = [clean_cycle(i) for i in (1, 2)]
    assert adjust_sampling(plan, cycles, 0, DEFAULTS, POLICY, 3) is plan


def test_dirty_cycle_in_window_blocks_reduction():
    plan = SamplingPlan.initial("api", DEFAULTS)
    cycles = [clean_cycle(1), dirty_cycle(2), clean_cycle(3)]
    assert adjust_sampling(plan, cycles, 0, DEFAULTS, POLICY, 4) is plan


def test_escape_wins_over_clean_window():
    plan = SamplingPlan.initial("api", DEFAULTS)
    cycles = [clean_cycle(i) for i in (1, 2, 3)]
    adjusted = adjust_sampling(plan, cycles, escape_count=1, defaults=DEFAULTS, policy=POLICY, cycle=4)
    assert adjusted.rate == pytest.approx(0.30)


def test_negative_escape_count_rejected():
    plan = SamplingPlan.initial("api", DEFAULTS)
    with pytest.raises(QualityError):
        adjust_sampling(plan, [], -1, DEFAULTS, POLICY, 1)


def test_sqc_rate_is_stored_not_recomputed():
    plan = SamplingPlan.initial("api", DEFAULTS)
    adjusted = set_sqc_rate(plan, 0.137, cycle=6, method_note="acceptance sampling, AQL 1.5")
    assert adjusted.rate == pytest.approx(0.137)
    assert adjusted.basis is SamplingBasis.SQC_METHOD
    with pytest.raises(QualityError):
        set_sqc_rate(plan, 0.5, cycle=6, method_note="")


@given(
    rate=st.floats(min_value=0.10, max_value=1.0),
    escapes=st.integers(min_value=0, max_value=3),
    clean_count=st.integers(min_value=0, max_value=5),
)
def test_adjusted_rate_stays_in_bounds(rate, escapes, clean_count):
    plan = SamplingPlan("api", rate=round(rate, 6))
    cycles = [clean_cycle(i) for i in range(1, clean_count + 1)]
    adjusted = adjust_sampling(plan, cycles, escapes, DEFAULTS, POLICY, cycle=9)
    assert DEFAULTS.minimum_rate <= adjusted.rate <= 1.0
    assert len(adjusted.history) <= len(plan.history) + 1


# -- cycle metrics


def make_record(event_id, item_id, cycle, reviewer="dev2", findings=(), first_pass=None, minutes=None, detected=DetectionPoint.REVIEW):
    from hybridgov.quality import OutcomeRecord

    outcome = ValidationOutcome(
        item_id=item_id,
        reviewer=reviewer,
        cycle=cycle,
        detected_in=detected,
        first_pass_accept=(not findings) if first_pass is None else first_pass,
        findings=tuple(findings),
        review_minutes=minutes,
    )
    return OutcomeRecord(event_id=event_id, task_type_id="api", item_tier=AutonomyTier.TIER2, outcome=outcome)


def test_metrics_over_mixed_cycle():
    records = [
        make_record(1, "a", 7, minutes=20),
        make_record(2, "b", 7, minutes=40),
        make_record(3, "c", 7, findings=[Finding(Severity.MAJOR, "business_logic")]),
        make_record(4, "d", 8),  # different cycle, excluded
    ]
    metrics = compute_cycle_metrics("api", 7, records)
    assert metrics.outcomes_count == 3
    assert metrics.first_pass_rate == pytest.approx(2 / 3)
    assert metrics.error_rate == pytest.approx(1 / 3)
    assert metrics.critical_count == 0
    assert metrics.mean_review_minutes == pytest.approx(30)
    assert metrics.detected_in_counts == {"review": 3}


def test_metrics_empty_cycle():
    metrics = compute_cycle_metrics("api", 3, [])
    assert metrics.empty
    assert metrics.first_pass_rate is None
    assert metrics.error_rate is None


# -- erosion


def build_erosion_store(tmp_path, schedule_human_item=False):
    store = RegistryStore(tmp_path / "erosion.jsonl")
    store.append(
        actor="sm",
        kind="task_type_registered",
        payload={"task_type_id": "api", "name": "api", "domain": "code", "cycle": 1},
        timestamp=TS,
    )
    store.append(
        actor="sm",
        kind="item_classified",
        payload={
            "item_id": "it-1",
            "title": "endpoint",
            "task_type_id": "api",
            "cycle": 1,
            "assessment": {
                "structuredness": "high",
                "verifiability": "high",
                "consequence": "medium",
                "capability": "established",
            },
            "default_tier": "tier2",
            "applied_tier": "tier2",
            "matched_rule": "matrix-row:high-high-established",
            "owner": "dev1",
        },
        timestamp=TS,
    )
    # push the clock to cycle 8 without touching api with human-only work
    store.append(
        actor="sm",
        kind="violation_noted",
        payload={"note": "late classification", "cycle": 8},
        timestamp=TS,
    )
    if schedule_human_item:
        store.append(
            actor="sm",
            kind="item_classified",
            payload={
                "item_id": "it-ho",
                "title": "Human-only cycle: api",
                "task_type_id": "api",
                "cycle": 8,
                "assessment": {
                    "structuredness": "high",
                    "verifiability": "high",
                    "consequence": "medium",
                    "capability": "established",
                },
                "default_tier": "tier2",
                "applied_tier": "ai_restricted",
                "matched_rule": "matrix-row:high-high-established",
                "rationale": "skill upkeep",
            },
            timestamp=TS,
        )
    return store


def test_erosion_flags_after_threshold(tmp_path):
    with build_erosion_store(tmp_path) as store:
        statuses = erosion_check(store.snapshot)
        assert len(statuses) == 1
        status = statuses[0]
        assert status.flagged
        assert status.cycles_since_human_only == 7
        assert status.suggested_item["applied_tier"] == "ai_restricted"
        assert status.suggested_item["task_type_id"] == "api"


def test_human_only_cycle_resets_erosion(tmp_path):
    with build_erosion_store(tmp_path) as store:
        store.append(
            actor="sm",
            kind="human_only_cycle_completed",
            payload={"task_type_id": "api", "cycle": 8},
            timestamp=TS,
        )
        statuses = erosion_check(store.snapshot)
        assert not statuses[0].flagged
        assert statuses[0].cycles_since_human_only == 0


def test_tier1_types_never_erode(tmp_path):
    with RegistryStore(tmp_path / "r.jsonl") as store:
        store.append(
            actor="sm",
            kind="task_type_registered",
            payload={"task_type_id": "ops", "name": "ops", "domain": "other", "cycle": 1},
            timestamp=TS,
        )
        store.append(
            actor="sm",
            kind="violation_noted",
            payload={"note": "x", "cycle": 20},
            timestamp=TS,
        )
        assert erosion_check(store.snapshot) == []


def test_erosion_threshold_must_be_positive(tmp_path):
    with build_erosion_store(tmp_path) as store:
        with pytest.raises(QualityError):
            erosion_check(store.snapshot, threshold=0)


# -- injection audits


def test_audit_requires_closed_campaign():
    campaign = InjectionCampaign(
        campaign_id="c1",
        plants=(PlantedError("p1", "it-1", "swapped operands", Severity.MAJOR, 2),),
        opened_cycle=2,
    )
    with pytest.raises(QualityError):
        run_injection_audit(campaign, [])


def test_audit_requires_plants():
    campaign = InjectionCampaign(campaign_id="c1", plants=(), opened_cycle=2, closed=True)
    with pytest.raises(QualityError):
        run_injection_audit(campaign, [])


def test_audit_scores_detection():
    campaign = InjectionCampaign(
        campaign_id="c1",
        plants=(
            PlantedError("p1", "it-1", "swapped operands", Severity.MAJOR, 2),
            PlantedError("p2", "it-2", "stale citation", Severity.MINOR, 2),
            PlantedError("p3", "it-3", "dropped rows", Severity.MAJOR, 3),
        ),
        opened_cycle=2,
        closed=True,
        closed_cycle=4,
    )
    records = [
        # caught at planted severity
        make_record(1, "it-1", 2, findings=[Finding(Severity.MAJOR, "business_logic")]),
        # finding exists but before the plant: does not count
        make_record(2, "it-3", 2, findings=[Finding(Severity.MAJOR, "edge_cases")]),
        # finding below planted severity: not a catch either
        make_record(3, "it-2", 3, findings=[]),
    ]
    report = run_injection_audit(campaign, records)
    assert report.planted_count == 3
    assert report.detected_plant_ids == ("p1",)
    assert set(report.missed_plant_ids) == {"p2", "p3"}
    assert report.detection_rate == pytest.approx(1 / 3)


# -- lint rules, seeded one at a time


def base_store(tmp_path, name):
    store = RegistryStore(tmp_path / name)
    store.append(
        actor="sm",
        kind="task_type_registered",
        payload={"task_type_id": "api", "name": "api", "domain": "code", "cycle": 1},
        timestamp=TS,
    )
    return store


def rules_fired(findings):
    return {f.rule for f in findings}


def test_lint_high_tier_start_on_unproven_claim(tmp_path):
    with base_store(tmp_path, "lint1.jsonl") as store:
        store.append(
            actor="sm",
            kind="item_classified",
            payload={
                "item_id": "it-1",
                "title": "endpoint",
                "task_type_id": "api",
                "cycle": 1,
                "assessment": {
                    "structuredness": "high",
                    "verifiability": "high",
                    "consequence": "low",
                    "capability": "emerging",
                },
                "default_tier": "tier2",
                "applied_tier": "tier3",
                "matched_rule": "dominance-closure:medium-medium-emerging",
                "rationale": "we trust it",
                "owner": "dev1",
            },
            timestamp=TS,
        )
        findings = lint(store.snapshot)
        assert "too_many_high_tier_starts" in rules_fired(findings)
        [finding] = [f for f in findings if f.rule == "too_many_high_tier_starts"]
        assert finding.subject == "it-1"


def test_lint_validation_not_budgeted(tmp_path):
    from hybridgov.planning import BacklogItem, SprintPlan

    plan = SprintPlan(
        sprint_id="s7",
        cycle=7,
        items=[
            BacklogItem(
                item_id="it-1",
                title="endpoint",
                task_type_id="api",
                tier=AutonomyTier.TIER2,
                baseline_points=8,
            )
        ],
        team_validation_capacity=None,
    )
    with base_store(tmp_path, "lint2.jsonl") as store:
        findings = lint(store.snapshot, plan=plan)
    fired = [f for f in findings if f.rule == "validation_not_budgeted"]
    assert {f.subject for f in fired} == {"s7", "it-1"}


def test_lint_performative_ownership(tmp_path):
    with base_store(tmp_path, "lint3.jsonl") as store:
        store.append(
            actor="sm",
            kind="item_classified",
            payload={
                "item_id": "it-1",
                "title": "endpoint",
                "task_type_id": "api",
                "cycle": 1,
                "assessment": {
                    "structuredness": "high",
                    "verifiability": "high",
                    "consequence": "medium",
                    "capability": "established",
                },
                "default_tier": "tier2",
                "applied_tier": "tier2",
                "matched_rule": "matrix-row:high-high-established",
                "owner": "dev1",
            },
            timestamp=TS,
        )
        for cycle in (1, 2):
            store.append(
                actor="dev2",
                kind="outcome_recorded",
                payload={
                    "item_id": "it-1",
                    "reviewer": "dev2",
                    "cycle": cycle,
                    "detected_in": "review",
                    "first_pass_accept": True,
                    "findings": [],
                },
                timestamp=TS,
            )
        findings = lint(store.snapshot)
        fired = [f for f in findings if f.rule == "performative_ownership"]
        assert [f.subject for f in fired] == ["dev1"]
        # one review by the owner clears it
        store.append(
            actor="dev1",
            kind="outcome_recorded",
            payload={
                "item_id": "it-1",
                "reviewer": "dev1",
                "cycle": 3,
                "detected_in": "review",
                "first_pass_accept": True,
                "findings": [],
            },
            timestamp=TS,
        )
        assert "performative_ownership" not in rules_fired(lint(store.snapshot))


def test_lint_unclassified_item_in_progress(tmp_path):
    with base_store(tmp_path, "lint4.jsonl") as store:
        store.append(
            actor="dev1",
            kind="item_status_changed",
            payload={"item_id": "mystery", "status": "in_progress", "cycle": 1},
            timestamp=TS,
        )
        findings = lint(store.snapshot)
        fired = [f for f in findings if f.rule == "unclassified_item"]
        assert [f.subject for f in fired] == ["mystery"]


def test_lint_erosion_ignored_and_its_remedy(tmp_path):
    with build_erosion_store(tmp_path) as store:
        assert "erosion_ignored" in rules_fired(lint(store.snapshot))
    with build_erosion_store(tmp_path.joinpath("fixed"), schedule_human_item=True) as store:
        assert "erosion_ignored" not in rules_fired(lint(store.snapshot))


def test_lint_erosion_grace_cycle(tmp_path):
    # flagged exactly at the threshold, still inside the grace window
    store = RegistryStore(tmp_path / "grace.jsonl")
    store.append(
        actor="sm",
        kind="task_type_registered",
        payload={"task_type_id": "api", "name": "api", "domain": "code", "cycle": 1},
        timestamp=TS,
    )
    store.append(
        actor="sm",
        kind="item_classified",
        payload={
            "item_id": "it-1",
            "title": "endpoint",
            "task_type_id": "api",
            "cycle": 1,
            "assessment": {
                "structuredness": "high",
                "verifiability": "high",
                "consequence": "medium",
                "capability": "established",
            },
            "default_tier": "tier2",
            "applied_tier": "tier2",
            "matched_rule": "matrix-row:high-high-established",
            "owner": "dev1",
        },
        timestamp=TS,
    )
    store.append(
        actor="sm",
        kind="violation_noted",
        payload={"note": "x", "cycle": 7},
        timestamp=TS,
    )
    try:
        assert erosion_check(store.snapshot)[0].flagged
        assert "erosion_ignored" not in rules_fired(lint(store.snapshot))
    finally:
        store.close()


def test_lint_violation_pattern_window(tmp_path):
    with base_store(tmp_path, "lint6.jsonl") as store:
        store.append(
            actor="sm",
            kind="violation_noted",
            payload={"note": "skipped review", "person": "dev4", "cycle": 5},
            timestamp=TS,
        )
        store.append(
            actor="sm",
            kind="violation_noted",
            payload={"note": "undisclosed generation", "person": "dev4", "cycle": 7},
            timestamp=TS,
        )
        findings = lint(store.snapshot)
        fired = [f for f in findings if f.rule == "registry_violation_pattern"]
        assert [f.subject for f in fired] == ["dev4"]


def test_lint_violations_outside_window_do_not_fire(tmp_path):
    with base_store(tmp_path, "lint6b.jsonl") as store:
        store.append(
            actor="sm",
            kind="violation_noted",
            payload={"note": "skipped review", "person": "dev4", "cycle": 2},
            timestamp=TS,
        )
        store.append(
            actor="sm",
            kind="violation_noted",
            payload={"note": "undisclosed generation", "person": "dev4", "cycle": 7},
            timestamp=TS,
        )
        assert "registry_violation_pattern" not in rules_fired(lint(store.snapshot))


def test_lint_clean_board_is_silent(tmp_path):
    with base_store(tmp_path, "clean.jsonl") as store:
        store.append(
            actor="sm",
            kind="item_classified",
            payload={
                "item_id": "it-1",
                "title": "endpoint",
                "task_type_id": "api",
                "cycle": 1,
                "assessment": {
                    "structuredness": "high",
                    "verifiability": "high",
                    "consequence": "medium",
                    "capability": "established",
                },
                "default_tier": "tier2",
                "applied_tier": "tier2",
                "matched_rule": "matrix-row:high-high-established",
                "owner": "dev1",
            },
            timestamp=TS,
        )
        store.append(
            actor="dev1",
            kind="outcome_recorded",
            payload={
                "item_id": "it-1",
                "reviewer": "dev1",
                "cycle": 1,
                "detected_in": "review",
                "first_pass_accept": True,
                "findings": [],
            },
            timestamp=TS,
        )
        assert lint(store.snapshot) == []


def test_lint_config_is_tunable(tmp_path):
    with base_store(tmp_path, "tune.jsonl") as store:
        store.append(
            actor="sm",
            kind="violation_noted",
            payload={"note": "a", "person": "dev4", "cycle": 1},
            timestamp=TS,
        )
        config = LintConfig(violation_repeat_limit=1)
        fired = rules_fired(lint(store.snapshot, config=config))
        assert "registry_violation_pattern" in fired


# -- checklist coverage


def test_checklist_coverage_against_template():
    template = BUNDLED_TEMPLATES["code"]
    full = {check_id: "pass" for check_id in template.check_ids()}
    assert checklist_coverage_ok(template, full)
    partial = dict(full)
    partial.pop("security")
    assert not checklist_coverage_ok(template, partial)
    # n/a still counts as having looked
    na = dict(full, security="n/a")
    assert checklist_coverage_ok(template, na)


def test_checklist_coverage_without_template():
    assert checklist_coverage_ok(None, {"anything": "pass"})
    assert not checklist_coverage_ok(None, {})
