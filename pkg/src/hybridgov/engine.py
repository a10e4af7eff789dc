"""One facade over the registry for every interface.

The CLI, the HTTP service, the fixtures, and the demos all go through
GovernanceEngine, so a classification or a retro produces the same event
sequence no matter which surface asked for it. The engine owns the
policy-reactive behavior the raw store deliberately does not: computing
default tiers, auto-demoting on criticals, and running retros.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional

from .config import GovernanceConfig, load_config
from .coproduction import SessionBlocked, finalize_blockers
from .decision import ClassificationResult, classify
from .planning import (
    BacklogItem,
    DoDReport,
    EffortBreakdown,
    SprintPlan,
    budget_validation,
    dod_check,
    estimate,
)
from .quality import (
    CycleMetrics,
    ErosionStatus,
    LintFinding,
    adjust_sampling,
    compute_cycle_metrics,
    erosion_check,
    lint,
    run_injection_audit,
)
from .registry import (
    EventKind,
    RegistryEvent,
    RegistrySnapshot,
    RegistryStore,
    export_csv,
    query_events,
)
from .tiers import Assessment, AutonomyTier, GovernanceError
from .transitions import (
    PromotionEligibility,
    TransitionTrigger,
    apply_demotion,
    build_promotion_event,
    check_promotion,
    count_trailing_breaches,
)


class EngineError(GovernanceError):
    pass


class GovernanceEngine:
    """Stateful wrapper: one open registry plus the team's configuration."""

    def __init__(
        self,
        registry_path: Path | str,
        config: Optional[GovernanceConfig] = None,
        *,
        writable: bool = True,
        skip_corrupt: bool = False,
    ):
        self.config = config or GovernanceConfig()
        self.store = RegistryStore(
            registry_path,
            self.config.policy,
            self.config.sampling,
            writable=writable,
            skip_corrupt=skip_corrupt,
        )

    @classmethod
    def from_config_file(cls, config_path: Path | str, **kwargs) -> "GovernanceEngine":
        """Open the registry named by a config file, resolved relative to it."""
        config_path = Path(config_path)
        config = load_config(config_path)
        registry = Path(config.registry_path)
        if not registry.is_absolute():
            registry = config_path.parent / registry
        return cls(registry, config, **kwargs)

    def close(self) -> None:
        self.store.close()

    def __enter__(self) -> "GovernanceEngine":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- read surface

    @property
    def snapshot(self) -> RegistrySnapshot:
        return self.store.snapshot

    @property
    def events(self) -> list[RegistryEvent]:
        return self.store.events

    def events_after(self, after: int) -> list[RegistryEvent]:
        return [e for e in self.store.events if e.event_id > after]

    def board(self) -> dict:
        return self.snapshot.board_metadata()

    def document(self, include_hidden: bool = False) -> dict:
        return self.snapshot.to_document(include_hidden=include_hidden)

    def query(self, **filters) -> list[RegistryEvent]:
        return query_events(self.snapshot, self.store.events, **filters)

    def export(self, entity: str) -> str:
        return export_csv(self.snapshot, entity)

    # -- writes: registration and classification

    def register_task_type(
        self, actor: str, timestamp: str, *, task_type_id: str, name: str,
        domain: str, cycle: int, note: str = ""
    ) -> RegistryEvent:
        return self.store.append(
            actor=actor,
            kind=EventKind.TASK_TYPE_REGISTERED,
            timestamp=timestamp,
            payload={
                "task_type_id": task_type_id,
                "name": name,
                "domain": domain,
                "cycle": cycle,
                "note": note,
            },
        )

    def classify_item(
        self,
        actor: str,
        timestamp: str,
        *,
        item_id: str,
        title: str,
        task_type_id: str,
        cycle: int,
        assessment: dict | Assessment,
        applied_tier: Optional[str | AutonomyTier] = None,
        rationale: str = "",
        owner: Optional[str] = None,
        baseline_points: Optional[float] = None,
    ) -> tuple[RegistryEvent, ClassificationResult]:
        """Classify one item: the matrix decides the default tier, the team
        may apply a different one with a written rationale."""
        parsed = assessment if isinstance(assessment, Assessment) else Assessment.parse(assessment)
        decision = classify(parsed, self.config.policy)
        applied = AutonomyTier.parse(applied_tier) if applied_tier is not None else decision.tier
        payload = {
            "item_id": item_id,
            "title": title,
            "task_type_id": task_type_id,
            "cycle": cycle,
            "assessment": parsed.to_payload(),
            "default_tier": decision.tier.wire,
            "applied_tier": applied.wire,
            "matched_rule": decision.matched_rule,
            "rationale": rationale or (decision.rationale if applied is decision.tier else ""),
        }
        if owner is not None:
            payload["owner"] = owner
        if baseline_points is not None:
            # ints and floats serialize differently; pick one wire form
            payload["baseline_points"] = float(baseline_points)
        event = self.store.append(
            actor=actor, kind=EventKind.ITEM_CLASSIFIED, timestamp=timestamp, payload=payload
        )
        return event, decision

    def assign_owner(
        self, actor: str, timestamp: str, *, item_id: str, owner: str, cycle: int, note: str = ""
    ) -> RegistryEvent:
        return self.store.append(
            actor=actor,
            kind=EventKind.OWNER_ASSIGNED,
            timestamp=timestamp,
            payload={"item_id": item_id, "owner": owner, "cycle": cycle, "note": note},
        )

    # -- writes: outcomes and the critical-error reflex

    def record_outcome(
        self,
        actor: str,
        timestamp: str,
        *,
        item_id: str,
        reviewer: str,
        cycle: int,
        detected_in: str,
        first_pass_accept: bool,
        findings: Iterable[dict] = (),
        checklist_results: Optional[dict] = None,
        review_minutes: Optional[float] = None,
        auto_demote: bool = True,
    ) -> list[RegistryEvent]:
        """Record one validation outcome.

        A critical finding triggers the immediate-demotion rule: the engine
        appends the demotion prompt and the demotion itself in the same
        call, no approval step in between.
        """
        findings = [dict(f) for f in findings]
        outcome_event = self.store.append(
            actor=actor,
            kind=EventKind.OUTCOME_RECORDED,
            timestamp=timestamp,
            payload={
                "item_id": item_id,
                "reviewer": reviewer,
                "cycle": cycle,
                "detected_in": detected_in,
                "first_pass_accept": first_pass_accept,
                "findings": findings,
                "checklist_results": checklist_results or {},
                "review_minutes": review_minutes,
            },
        )
        events = [outcome_event]
        has_critical = any(str(f.get("severity", "")).lower() == "critical" for f in findings)
        if has_critical and auto_demote:
            item = self.snapshot.items[item_id]
            task_type = self.snapshot.task_types.get(item.task_type_id or "")
            if (
                task_type is not None
                and task_type.current_tier is not None
                and task_type.current_tier is not AutonomyTier.AI_RESTRICTED
            ):
                events += self._demote_with_prompt(
                    actor,
                    timestamp,
                    task_type_id=task_type.task_type_id,
                    trigger=TransitionTrigger.CRITICAL_ERROR,
                    cycle=cycle,
                    reason=f"critical finding on {item_id}",
                    finding_event_id=outcome_event.event_id,
                )
        return events

    def _demote_with_prompt(
        self,
        actor: str,
        timestamp: str,
        *,
        task_type_id: str,
        trigger: TransitionTrigger,
        cycle: int,
        reason: str,
        finding_event_id: Optional[int] = None,
        rationale: str = "",
    ) -> list[RegistryEvent]:
        prompt = self.store.append(
            actor=actor,
            kind=EventKind.DEMOTION_PROMPTED,
            timestamp=timestamp,
            payload={
                "task_type_id": task_type_id,
                "cycle": cycle,
                "reason": reason,
                "finding_event_id": finding_event_id,
            },
        )
        task_type = self.snapshot.task_types[task_type_id]
        transition = apply_demotion(
            task_type_id,
            task_type.current_tier,
            trigger,
            actor,
            self.config.policy,
            cycle,
            rationale=rationale or reason,
            evidence=task_type.ledger.cycles[-3:],
        )
        payload = transition.to_payload()
        applied = self.store.append(
            actor=actor,
            kind=EventKind.TRANSITION_APPLIED,
            timestamp=timestamp,
            payload=payload,
        )
        return [prompt, applied]

    # -- writes: explicit transitions

    def demote(
        self,
        actor: str,
        timestamp: str,
        *,
        task_type_id: str,
        trigger: str | TransitionTrigger,
        cycle: int,
        rationale: str = "",
    ) -> list[RegistryEvent]:
        """Demote a task type now. Any team member may do this; there is no
        approval field to fill in."""
        trigger = trigger if isinstance(trigger, TransitionTrigger) else TransitionTrigger(trigger)
        if task_type_id not in self.snapshot.task_types:
            raise EngineError(f"unknown task type {task_type_id!r}")
        return self._demote_with_prompt(
            actor,
            timestamp,
            task_type_id=task_type_id,
            trigger=trigger,
            cycle=cycle,
            reason=rationale or f"{trigger.wire} demotion requested by {actor}",
            rationale=rationale,
        )

    def promotion_status(self, task_type_id: str, capacity_ok: bool = True) -> PromotionEligibility:
        task_type = self.snapshot.task_types.get(task_type_id)
        if task_type is None:
            raise EngineError(f"unknown task type {task_type_id!r}")
        if task_type.current_tier is None:
            raise EngineError(f"task type {task_type_id!r} has no tier yet; classify an item first")
        return check_promotion(
            task_type.current_tier, task_type.ledger, self.config.policy, capacity_ok
        )

    def promote(
        self,
        actor: str,
        timestamp: str,
        *,
        task_type_id: str,
        cycle: int,
        capacity_confirmed: bool,
        rationale: str = "",
    ) -> RegistryEvent:
        task_type = self.snapshot.task_types.get(task_type_id)
        if task_type is None:
            raise EngineError(f"unknown task type {task_type_id!r}")
        if task_type.current_tier is None:
            raise EngineError(f"task type {task_type_id!r} has no tier yet; classify an item first")
        transition = build_promotion_event(
            task_type.current_tier,
            task_type.ledger,
            self.config.policy,
            capacity_confirmed,
            requested_by=actor,
            cycle=cycle,
            rationale=rationale,
        )
        payload = transition.to_payload()
        payload["capacity_confirmed"] = capacity_confirmed
        return self.store.append(
            actor=actor, kind=EventKind.TRANSITION_APPLIED, timestamp=timestamp, payload=payload
        )

    # -- writes: thin wrappers over the remaining event kinds

    def record_provenance(
        self, actor: str, timestamp: str, *, item_id: str, producer: str, tool: str = "",
        prompt_ref: str = "", generated_at: str = "", cycle: int = 0, note: str = ""
    ) -> RegistryEvent:
        return self.store.append(
            actor=actor,
            kind=EventKind.PROVENANCE_RECORDED,
            timestamp=timestamp,
            payload={
                "item_id": item_id,
                "producer": producer,
                "tool": tool,
                "prompt_ref": prompt_ref,
                "generated_at": generated_at or timestamp,
                "cycle": cycle,
                "note": note,
            },
        )

    def note_violation(
        self, actor: str, timestamp: str, *, note: str, cycle: int,
        person: Optional[str] = None, task_type_id: Optional[str] = None,
        item_id: Optional[str] = None,
    ) -> RegistryEvent:
        payload = {"note": note, "cycle": cycle}
        if person is not None:
            payload["person"] = person
        if task_type_id is not None:
            payload["task_type_id"] = task_type_id
        if item_id is not None:
            payload["item_id"] = item_id
        return self.store.append(
            actor=actor, kind=EventKind.VIOLATION_NOTED, timestamp=timestamp, payload=payload
        )

    def complete_human_only_cycle(
        self, actor: str, timestamp: str, *, task_type_id: str, cycle: int,
        note: str = "", participants: Iterable[str] = ()
    ) -> RegistryEvent:
        return self.store.append(
            actor=actor,
            kind=EventKind.HUMAN_ONLY_CYCLE_COMPLETED,
            timestamp=timestamp,
            payload={
                "task_type_id": task_type_id,
                "cycle": cycle,
                "note": note,
                "participants": list(participants),
            },
        )

    def set_item_status(
        self, actor: str, timestamp: str, *, item_id: str, status: str, cycle: int,
        title: str = "", note: str = ""
    ) -> RegistryEvent:
        payload = {"item_id": item_id, "status": status, "cycle": cycle, "note": note}
        if title:
            payload["title"] = title
        return self.store.append(
            actor=actor, kind=EventKind.ITEM_STATUS_CHANGED, timestamp=timestamp, payload=payload
        )

    def verify_integration(
        self, actor: str, timestamp: str, *, item_id: str, cycle: int, suite: str, note: str = ""
    ) -> RegistryEvent:
        return self.store.append(
            actor=actor,
            kind=EventKind.INTEGRATION_VERIFIED,
            timestamp=timestamp,
            payload={"item_id": item_id, "cycle": cycle, "suite": suite, "note": note},
        )

    def resolve_deficiencies(
        self, actor: str, timestamp: str, *, item_id: str, cycle: int, resolution: str, note: str = ""
    ) -> RegistryEvent:
        return self.store.append(
            actor=actor,
            kind=EventKind.DEFICIENCIES_RESOLVED,
            timestamp=timestamp,
            payload={"item_id": item_id, "cycle": cycle, "resolution": resolution, "note": note},
        )

    def downgrade_rating(
        self, actor: str, timestamp: str, *, task_type_id: str, cycle: int,
        old_rating: str, new_rating: str, reason: str
    ) -> RegistryEvent:
        return self.store.append(
            actor=actor,
            kind=EventKind.RATING_DOWNGRADED,
            timestamp=timestamp,
            payload={
                "task_type_id": task_type_id,
                "cycle": cycle,
                "old_rating": old_rating,
                "new_rating": new_rating,
                "reason": reason,
            },
        )

    def session_action(
        self, actor: str, timestamp: str, *, session_id: str, action: str, cycle: int, **fields
    ) -> RegistryEvent:
        if action == "finalized":
            # raise the typed error so callers get the blocker list, not
            # a flattened schema message
            session = self.snapshot.sessions.get(session_id)
            if session is not None and session.open:
                blockers = finalize_blockers(session)
                if blockers:
                    raise SessionBlocked(blockers)
        payload = {"session_id": session_id, "action": action, "cycle": cycle, **fields}
        return self.store.append(
            actor=actor, kind=EventKind.SESSION_EVENT, timestamp=timestamp, payload=payload
        )

    def plant_injection(
        self, actor: str, timestamp: str, *, campaign_id: str, plant_id: str, item_id: str,
        description: str, severity: str, cycle: int
    ) -> RegistryEvent:
        return self.store.append(
            actor=actor,
            kind=EventKind.INJECTION_PLANTED,
            timestamp=timestamp,
            payload={
                "campaign_id": campaign_id,
                "plant_id": plant_id,
                "item_id": item_id,
                "description": description,
                "severity": severity,
                "cycle": cycle,
            },
        )

    def resolve_injection(
        self, actor: str, timestamp: str, *, campaign_id: str, cycle: int,
        detected_plant_ids: Iterable[str] = (), note: str = ""
    ) -> RegistryEvent:
        return self.store.append(
            actor=actor,
            kind=EventKind.INJECTION_RESOLVED,
            timestamp=timestamp,
            payload={
                "campaign_id": campaign_id,
                "cycle": cycle,
                "detected_plant_ids": list(detected_plant_ids),
                "note": note,
            },
        )

    def audit_campaign(self, campaign_id: str):
        campaign = self.snapshot.campaigns.get(campaign_id)
        if campaign is None:
            raise EngineError(f"unknown campaign {campaign_id!r}")
        return run_injection_audit(campaign, self.snapshot.outcomes)

    # -- planning helpers

    def backlog_item(self, item_id: str) -> BacklogItem:
        state = self.snapshot.items.get(item_id)
        if state is None:
            raise EngineError(f"unknown item {item_id!r}")
        return BacklogItem(
            item_id=state.item_id,
            title=state.title,
            task_type_id=state.task_type_id or "",
            tier=state.tier,
            baseline_points=state.baseline_points or 0.0,
            owner=state.owner,
            status=state.status,
        )

    def estimate_item(
        self, item_id: str, tier: Optional[str | AutonomyTier] = None
    ) -> EffortBreakdown:
        """Estimate one item; pass ``tier`` for a what-if at another tier."""
        item = self.backlog_item(item_id)
        if tier is not None:
            item.tier = AutonomyTier.parse(tier)
        rate = None
        if item.tier is AutonomyTier.TIER3 and item.task_type_id in self.snapshot.task_types:
            rate = self.snapshot.task_types[item.task_type_id].sampling.rate
        return estimate(item, self.config.effort_model, sampling_rate=rate)

    def preview_classification(
        self,
        assessment: dict | Assessment,
        *,
        baseline_points: Optional[float] = None,
        tier: Optional[str | AutonomyTier] = None,
        task_type_id: Optional[str] = None,
    ) -> dict:
        """Dry-run a classification: the decision the matrix would reach
        and, when a baseline is given, the effort at the applied tier.
        Appends nothing; this is what UI previews call before commit."""
        parsed = assessment if isinstance(assessment, Assessment) else Assessment.parse(assessment)
        decision = classify(parsed, self.config.policy)
        applied = AutonomyTier.parse(tier) if tier is not None else decision.tier
        breakdown = None
        if baseline_points is not None:
            draft = BacklogItem(
                item_id="preview",
                title="",
                task_type_id=task_type_id or "",
                tier=applied,
                baseline_points=float(baseline_points),
            )
            rate = None
            if applied is AutonomyTier.TIER3:
                # a known type previews at its live sampling rate
                if task_type_id and task_type_id in self.snapshot.task_types:
                    rate = self.snapshot.task_types[task_type_id].sampling.rate
                else:
                    rate = self.config.sampling.initial_rate
            breakdown = estimate(draft, self.config.effort_model, sampling_rate=rate)
        return {
            "decision": decision.to_payload(),
            "applied_tier": applied.wire,
            "estimate": breakdown.to_payload() if breakdown else None,
        }

    def build_plan(
        self, sprint_id: str, cycle: int, item_ids: Iterable[str],
        team_validation_capacity: Optional[float] = None,
    ) -> SprintPlan:
        items = []
        for item_id in item_ids:
            item = self.backlog_item(item_id)
            if item.tier is not None and item.baseline_points > 0:
                item.estimate = self.estimate_item(item_id)
            items.append(item)
        return SprintPlan(
            sprint_id=sprint_id,
            cycle=cycle,
            items=items,
            team_validation_capacity=team_validation_capacity,
        )

    def budget(self, plan: SprintPlan):
        return budget_validation(plan)

    def dod(self, item_id: str) -> DoDReport:
        return dod_check(item_id, self.snapshot)

    # -- reports

    def metrics(self, task_type_id: str, cycle: int) -> CycleMetrics:
        return compute_cycle_metrics(task_type_id, cycle, self.snapshot.outcomes)

    def erosion_report(self) -> list[ErosionStatus]:
        return erosion_check(self.snapshot, self.config.erosion.threshold)

    def lint_report(self, plan: Optional[SprintPlan] = None) -> list[LintFinding]:
        return lint(self.snapshot, plan, self.config.lint_config())

    # -- the retrospective

    def retro(
        self, actor: str, timestamp: str, *, cycle: int, capacity_ok: bool = True
    ) -> dict:
        """Run the end-of-cycle review and append whatever events it implies.

        Applied automatically: breach-streak demotions and sampling-rate
        adjustments. Reported but never auto-applied: promotion
        eligibility (promoting is a deliberate act) and erosion flags
        (scheduling human-only work is the team's call).
        """
        snapshot = self.snapshot
        policy = self.config.policy
        appended: list[RegistryEvent] = []

        metrics = []
        for task_type_id in sorted(snapshot.task_types):
            m = compute_cycle_metrics(task_type_id, cycle, snapshot.outcomes)
            if not m.empty:
                metrics.append(m)

        demotions = []
        for task_type_id in sorted(snapshot.task_types):
            task_type = snapshot.task_types[task_type_id]
            tier = task_type.current_tier
            if tier is None or tier is AutonomyTier.AI_RESTRICTED:
                continue
            streak = count_trailing_breaches(task_type.ledger, policy)
            if streak >= policy.consecutive_breach_limit:
                events = self._demote_with_prompt(
                    actor,
                    timestamp,
                    task_type_id=task_type_id,
                    trigger=TransitionTrigger.CONSECUTIVE_BREACH,
                    cycle=cycle,
                    reason=f"{streak} consecutive breached cycles",
                )
                appended += events
                demotions.append(events[-1].payload)

        sampling_changes = []
        for task_type_id in sorted(snapshot.task_types):
            task_type = snapshot.task_types[task_type_id]
            tier = task_type.current_tier
            if tier is None or tier.number < 3:
                continue
            escapes = sum(
                1
                for record in snapshot.outcomes
                if record.task_type_id == task_type_id
                and record.outcome.cycle == cycle
                and record.outcome.detected_in.wire in ("integration", "post_delivery")
                and record.outcome.findings
            )
            plan = task_type.sampling
            adjusted = adjust_sampling(
                plan, task_type.ledger.cycles, escapes, self.config.sampling, policy, cycle
            )
            if adjusted is not plan and adjusted.history:
                change = adjusted.history[-1]
                event = self.store.append(
                    actor=actor,
                    kind=EventKind.SAMPLING_ADJUSTED,
                    timestamp=timestamp,
                    payload={
                        "task_type_id": task_type_id,
                        "cycle": cycle,
                        "old_rate": change.old_rate,
                        "new_rate": change.new_rate,
                        "basis": change.basis.wire,
                        "reason": change.reason,
                    },
                )
                appended.append(event)
                sampling_changes.append(event.payload)

        eligibility = []
        for task_type_id in sorted(snapshot.task_types):
            task_type = snapshot.task_types[task_type_id]
            tier = task_type.current_tier
            if tier is None or tier in (AutonomyTier.AI_RESTRICTED, AutonomyTier.TIER4):
                continue
            eligibility.append(
                check_promotion(tier, task_type.ledger, policy, capacity_ok).to_payload()
            )

        erosion = [status.to_payload() for status in self.erosion_report()]

        return {
            "cycle": cycle,
            "metrics": [m.to_payload() for m in metrics],
            "breach_demotions": demotions,
            "sampling_adjustments": sampling_changes,
            "promotion_eligibility": eligibility,
            "erosion": erosion,
            "events_appended": [e.event_id for e in appended],
        }
