"""Canned registry scenarios.

`build_demo_registry` plays two months of a six-person team through the
engine: registrations, a delegated sprint, an escaped defect, a capability
downgrade, and the retro that reacts to all of it. Tests, demos, and the
service's --demo flag all share it so they agree on what "a realistic
registry" means. `build_lint_seeded` is its evil twin: a registry plus a
plan arranged so every lint rule fires exactly once.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .checklists import BUNDLED_TEMPLATES
from .config import GovernanceConfig
from .engine import GovernanceEngine
from .planning import SprintPlan
from .quality import SamplingDefaults

SM = "sm"
PO = "po"
DEVS = ("dev1", "dev2", "dev3", "dev4")


def demo_config() -> GovernanceConfig:
    """Config the demo scenario is built (and must be replayed) with.

    The team starts tier 3 sampling at 25%: a clean run walks it down to
    15%, and the escaped defect in cycle 7 pushes it back up to 25%.
    """
    return GovernanceConfig(sampling=SamplingDefaults(initial_rate=0.25))

_FULL_CODE = {check_id: "pass" for check_id in BUNDLED_TEMPLATES["code"].check_ids()}
_FULL_DOC = {check_id: "pass" for check_id in BUNDLED_TEMPLATES["document"].check_ids()}


class _Clock:
    """Monotonic fake timestamps; one minute per event keeps them sortable."""

    def __init__(self):
        self.ticks = 0

    def next(self, cycle: int) -> str:
        self.ticks += 1
        hour = 9 + self.ticks // 60
        return f"2026-07-{max(cycle, 1):02d}T{hour:02d}:{self.ticks % 60:02d}:00Z"


def build_demo_registry(
    path: Path | str, config: Optional[GovernanceConfig] = None
) -> GovernanceEngine:
    engine = GovernanceEngine(path, config or demo_config())
    clock = _Clock()

    def ts(cycle: int) -> str:
        return clock.next(cycle)

    # cycle 1: the team maps its work into task types
    for task_type_id, name, domain in (
        ("api_endpoints", "REST API endpoints", "code"),
        ("unit_tests", "Unit test authoring", "code"),
        ("user_docs", "User-facing documentation", "document"),
        ("security_review", "Security design review", "other"),
        ("release_notes", "Release notes drafting", "document"),
        ("migration_script", "Data migration scripts", "code"),
    ):
        engine.register_task_type(
            SM, ts(1), task_type_id=task_type_id, name=name, domain=domain, cycle=1
        )

    # scheduled human-only work keeps skills warm on the delegated types
    engine.complete_human_only_cycle(
        SM, ts(3), task_type_id="release_notes", cycle=3,
        note="manual drafting day", participants=["dev3", "po"],
    )
    engine.complete_human_only_cycle(
        SM, ts(4), task_type_id="api_endpoints", cycle=4,
        note="no-assistant implementation rotation", participants=["dev1", "dev4"],
    )
    engine.complete_human_only_cycle(
        SM, ts(5), task_type_id="user_docs", cycle=5,
        note="docs written from scratch", participants=["dev3"],
    )

    # cycles 4-6: unit test generation runs supervised and stays clean
    mature_tests = {
        "structuredness": "high",
        "verifiability": "high",
        "consequence": "low",
        "capability": "mature",
    }
    for cycle in (4, 5, 6):
        item_id = f"ut-hist-{cycle}"
        engine.classify_item(
            PO, ts(cycle),
            item_id=item_id,
            title=f"Test coverage batch, cycle {cycle}",
            task_type_id="unit_tests",
            cycle=cycle,
            assessment=mature_tests,
            applied_tier="tier3",
            rationale="hold at supervised delegation until the integration dashboard lands",
            owner="dev2",
            baseline_points=5,
        )
        for n in (1, 2):
            engine.record_outcome(
                "dev2", ts(cycle),
                item_id=item_id, reviewer="dev2", cycle=cycle,
                detected_in="sampling", first_pass_accept=True,
                findings=[], checklist_results=dict(_FULL_CODE), review_minutes=18 + n,
            )

    # cycle 6 retro: three clean cycles lower the sampling rate a step
    engine.retro(SM, ts(6), cycle=6)

    # cycle 7 planning: the sprint's six items, one per task type
    classify = [
        dict(
            item_id="it-api-21", title="Bulk export endpoint",
            task_type_id="api_endpoints",
            assessment=dict(structuredness="high", verifiability="high",
                            consequence="medium", capability="established"),
            owner="dev1", baseline_points=8,
        ),
        dict(
            item_id="it-ut-22", title="Tests for bulk export",
            task_type_id="unit_tests", assessment=mature_tests,
            applied_tier="tier3",
            rationale="hold at supervised delegation until the integration dashboard lands",
            owner="dev2", baseline_points=5,
        ),
        dict(
            item_id="it-docs-23", title="Export how-to guide",
            task_type_id="user_docs",
            assessment=dict(structuredness="medium", verifiability="medium",
                            consequence="medium", capability="emerging"),
            applied_tier="tier2",
            rationale="template scaffolding plus full review budgeted this sprint",
            owner="dev3", baseline_points=5,
        ),
        dict(
            item_id="it-sec-24", title="Threat model for export",
            task_type_id="security_review",
            assessment=dict(structuredness="low", verifiability="low",
                            consequence="high", capability="unproven"),
            baseline_points=6,
        ),
        dict(
            item_id="it-rel-25", title="v2.4 release notes",
            task_type_id="release_notes",
            assessment=dict(structuredness="high", verifiability="high",
                            consequence="medium", capability="established"),
            owner="dev3", baseline_points=3,
        ),
        dict(
            item_id="it-mig-26", title="Backfill export flags",
            task_type_id="migration_script",
            assessment=dict(structuredness="high", verifiability="medium",
                            consequence="high", capability="emerging"),
            applied_tier="tier1",
            rationale="run under direct supervision with a dry-run harness",
            owner="dev4", baseline_points=4,
        ),
    ]
    for spec_kwargs in classify:
        engine.classify_item(PO, ts(7), cycle=7, **spec_kwargs)

    # provenance for everything the assistant produced
    for item_id, producer, tool in (
        ("it-api-21", "ai_system", "codegen-cli"),
        ("it-ut-22", "ai_system", "codegen-cli"),
        ("it-docs-23", "mixed", "draft-assist"),
        ("it-rel-25", "ai_system", "draft-assist"),
    ):
        engine.record_provenance(
            "dev1", ts(7), item_id=item_id, producer=producer, tool=tool,
            prompt_ref=f"prompts/{item_id}.md", cycle=7,
        )

    engine.set_item_status("dev1", ts(7), item_id="it-api-21", status="in_progress", cycle=7)

    # a co-production session on the docs item, run to a clean finalize
    sid = "sess-docs-23-1"
    engine.session_action(
        "dev3", ts(7), session_id=sid, action="opened", cycle=7,
        owner="dev3", task_type_id="user_docs", item_id="it-docs-23",
        checkpoint_interval_minutes=25,
        attested_notes="drafting the export guide with the assistant",
    )
    engine.session_action(
        "dev3", ts(7), session_id=sid, action="checkpoint", cycle=7,
        at_minutes=25, note="outline holds; examples section needs real payloads",
    )
    engine.session_action(
        "dev3", ts(7), session_id=sid, action="pivot", cycle=7,
        at_minutes=30, description="switch from narrative doc to task-based recipes",
        significant=True, adopted=True,
    )
    engine.session_action(
        "dev3", ts(7), session_id=sid, action="merit_review", cycle=7,
        at_minutes=32, pivot_index=0,
        rationale="recipes match how support tickets phrase the problem",
    )
    for minutes, text in (
        (33, "narrative flow gives better first-read comprehension"),
        (35, "recipes duplicate steps across sections and rot faster"),
        (38, "support tickets may be a biased sample of readers"),
    ):
        engine.session_action(
            "dev3", ts(7), session_id=sid, action="counterargument", cycle=7,
            at_minutes=minutes, text=text,
        )
    engine.session_action(
        "dev3", ts(7), session_id=sid, action="finalized", cycle=7,
        at_minutes=45, summary="recipe format adopted; counterarguments logged",
    )

    # cycle 7 review outcomes
    engine.record_outcome(
        "dev2", ts(7), item_id="it-api-21", reviewer="dev2", cycle=7,
        detected_in="review", first_pass_accept=True, findings=[],
        checklist_results=dict(_FULL_CODE), review_minutes=40,
    )
    engine.record_outcome(
        "dev2", ts(7), item_id="it-api-21", reviewer="dev2", cycle=7,
        detected_in="review", first_pass_accept=False,
        findings=[{"severity": "major", "category": "business_logic",
                   "note": "pagination cursor off by one on the last page"}],
        checklist_results={**_FULL_CODE, "business_logic": "fail"}, review_minutes=55,
    )
    engine.record_outcome(
        "dev2", ts(7), item_id="it-api-21", reviewer="dev2", cycle=7,
        detected_in="review", first_pass_accept=True, findings=[],
        checklist_results=dict(_FULL_CODE), review_minutes=35,
    )
    engine.record_outcome(
        "dev2", ts(7), item_id="it-ut-22", reviewer="dev2", cycle=7,
        detected_in="sampling", first_pass_accept=True, findings=[],
        checklist_results=dict(_FULL_CODE), review_minutes=20,
    )
    engine.record_outcome(
        "dev2", ts(7), item_id="it-ut-22", reviewer="dev2", cycle=7,
        detected_in="sampling", first_pass_accept=True, findings=[],
        checklist_results=dict(_FULL_CODE), review_minutes=22,
    )
    # the escape: a generated test asserted against a mocked interface that
    # does not exist; integration caught it after merge
    engine.record_outcome(
        "dev1", ts(7), item_id="it-ut-22", reviewer="dev1", cycle=7,
        detected_in="integration", first_pass_accept=False,
        findings=[{"severity": "major", "category": "hallucinated_interfaces",
                   "note": "mocked a client method that is not in the SDK"}],
        checklist_results={}, review_minutes=30,
    )
    engine.record_outcome(
        PO, ts(7), item_id="it-docs-23", reviewer="po", cycle=7,
        detected_in="review", first_pass_accept=False,
        findings=[{"severity": "major", "category": "factual_accuracy",
                   "note": "cites a rate-limit table that does not exist"}],
        checklist_results={**_FULL_DOC, "factual_accuracy": "fail"}, review_minutes=45,
    )
    engine.record_outcome(
        PO, ts(7), item_id="it-rel-25", reviewer="po", cycle=7,
        detected_in="review", first_pass_accept=True, findings=[],
        checklist_results=dict(_FULL_DOC), review_minutes=15,
    )

    # a small injection drill on the release notes; the reviewer missed it
    engine.plant_injection(
        SM, ts(7), campaign_id="audit-q3", plant_id="plant-1", item_id="it-rel-25",
        description="dangling cross-reference planted for the review drill",
        severity="minor", cycle=7,
    )
    engine.resolve_injection(
        SM, ts(7), campaign_id="audit-q3", cycle=7, detected_plant_ids=[],
        note="not flagged in review; scheduling a checklist refresh",
    )

    engine.note_violation(
        SM, ts(7),
        note="migration dry-run output merged without review sign-off",
        cycle=7, person="dev4", task_type_id="migration_script", item_id="it-mig-26",
    )

    engine.verify_integration(
        "dev1", ts(7), item_id="it-api-21", cycle=7, suite="ci-integration",
    )
    engine.resolve_deficiencies(
        "dev1", ts(7), item_id="it-api-21", cycle=7, resolution="fixed",
        note="pagination cursor fixed and re-reviewed",
    )
    engine.verify_integration(
        PO, ts(7), item_id="it-rel-25", cycle=7, suite="docs-build",
    )
    engine.set_item_status("dev1", ts(7), item_id="it-api-21", status="done", cycle=7)
    engine.set_item_status(PO, ts(7), item_id="it-rel-25", status="done", cycle=7)
    engine.set_item_status("dev2", ts(7), item_id="it-ut-22", status="validating", cycle=7)

    # cycle 7 retro: the escape raises the sampling rate; nothing demotes
    engine.retro(SM, ts(7), cycle=7)

    # the fabricated citation costs user_docs its claimed rating
    engine.downgrade_rating(
        PO, ts(7), task_type_id="user_docs", cycle=7,
        old_rating="emerging", new_rating="unproven",
        reason="fabricated citation in the export guide",
    )

    # cycle 8: the follow-up runs as a pilot, and the erosion flag on
    # unit_tests gets a scheduled human-only item instead of a shrug
    engine.classify_item(
        PO, ts(8),
        item_id="it-docs-27", title="Export guide, corrected edition",
        task_type_id="user_docs", cycle=8,
        assessment=dict(structuredness="medium", verifiability="medium",
                        consequence="medium", capability="unproven"),
        owner="dev3", baseline_points=4,
    )
    engine.classify_item(
        SM, ts(8),
        item_id="it-ut-28", title="Manual test design workshop",
        task_type_id="unit_tests", cycle=8,
        assessment=mature_tests,
        applied_tier="ai_restricted",
        rationale="scheduled human-only cycle to counter skill erosion",
        owner="dev2", baseline_points=5,
    )
    return engine


def build_lint_seeded(path: Path | str) -> tuple[GovernanceEngine, SprintPlan]:
    """A registry arranged so each lint rule has exactly one thing to say."""
    engine = GovernanceEngine(path)
    clock = _Clock()

    def ts(cycle: int) -> str:
        return clock.next(cycle)

    for task_type_id, name in (
        ("gen_code", "Generated code"),
        ("perf_code", "Perf-owned code"),
        ("erode_type", "Neglected delegated type"),
    ):
        engine.register_task_type(
            SM, ts(1), task_type_id=task_type_id, name=name, domain="code", cycle=1
        )

    # rule 1: tier 3 on an unproven track record
    engine.classify_item(
        PO, ts(1),
        item_id="bad-1", title="Trusted too early", task_type_id="gen_code", cycle=1,
        assessment=dict(structuredness="high", verifiability="high",
                        consequence="medium", capability="emerging"),
        applied_tier="tier3", rationale="we trust it", owner="dev9",
        baseline_points=5,
    )

    # rule 3: dev8 owns supervised work, others review it, two cycles running
    engine.classify_item(
        PO, ts(1),
        item_id="perf-1", title="Owned on paper", task_type_id="perf_code", cycle=1,
        assessment=dict(structuredness="high", verifiability="high",
                        consequence="medium", capability="established"),
        owner="dev8", baseline_points=5,
    )
    for cycle in (1, 2):
        engine.record_outcome(
            "dev7", ts(cycle), item_id="perf-1", reviewer="dev7", cycle=cycle,
            detected_in="review", first_pass_accept=True, findings=[],
        )

    # rule 5: erode_type is delegated at cycle 1 and never practiced again
    engine.classify_item(
        PO, ts(1),
        item_id="erode-1", title="Delegated and forgotten", task_type_id="erode_type",
        cycle=1,
        assessment=dict(structuredness="high", verifiability="high",
                        consequence="medium", capability="established"),
        owner="dev8", baseline_points=5,
    )

    # keep the other two types freshly practiced so rule 5 stays single-subject
    for task_type_id in ("gen_code", "perf_code"):
        engine.complete_human_only_cycle(
            SM, ts(7), task_type_id=task_type_id, cycle=7, note="practice day"
        )

    # rule 4: work started on an item nobody classified
    engine.set_item_status(
        "dev6", ts(7), item_id="ghost-1", status="in_progress", cycle=7,
        title="Untracked side quest",
    )

    # rule 6: the same person bypasses the registry twice inside the window
    engine.note_violation(
        SM, ts(7), note="merged generated code without provenance", cycle=7, person="dev6"
    )
    engine.note_violation(
        SM, ts(8), note="skipped review on a generated patch", cycle=8, person="dev6"
    )

    # rule 2: a plan that books supervised work with no validation budget
    plan = SprintPlan(
        sprint_id="sprint-9",
        cycle=8,
        items=[engine.backlog_item("bad-1")],
        team_validation_capacity=None,
    )
    return engine, plan
