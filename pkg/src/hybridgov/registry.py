"""Append-only delegation registry with deterministic replay.

The log is the system of record: one canonical-JSON event per line under
a schema-versioned header. All derived state (tiers, ledgers, sampling
plans, board metadata, sessions) folds from the log through a single code
path, so a replayed registry and a live one can never disagree. Events
are validated against both their kind's schema and the folded state at
the moment of append; replay re-runs the same validation, which makes a
hand-edited log detectable.

Timestamps are caller-supplied strings recorded verbatim: the registry
orders by event id, never by clock.
"""

from __future__ import annotations

import enum
import fcntl
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from . import coproduction
from .coproduction import Session, SessionError
from .quality import (
    DetectionPoint,
    Finding,
    InjectionCampaign,
    OutcomeRecord,
    PlantedError,
    SamplingAdjustment,
    SamplingBasis,
    SamplingDefaults,
    SamplingPlan,
    Severity,
    ValidationOutcome,
)
from .checklists import TASK_DOMAINS
from .tiers import Assessment, AutonomyTier, CapabilityRating, GovernanceError
from .transitions import (
    CycleSummary,
    EvidenceLedger,
    TransitionPolicy,
    TransitionTrigger,
    check_promotion,
    derive_capability_rating,
)

SCHEMA_VERSION = 1

ITEM_STATUSES = ("planned", "in_progress", "validating", "done")
PROVENANCE_PRODUCERS = ("ai_system", "human", "mixed")


def canonical_json(value: Any) -> str:
    """Stable serialization: sorted keys, tight separators, utf-8 kept."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class RegistryError(GovernanceError):
    pass


class RegistryMissing(RegistryError, FileNotFoundError):
    """Also a FileNotFoundError so interfaces can route it as I/O."""


class SchemaViolation(RegistryError):
    """Event rejected: malformed envelope or payload, or state conflict."""


class CorruptLog(RegistryError):
    def __init__(self, message: str, line_number: int, event_id: Optional[int] = None):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
        self.event_id = event_id


class RegistryLocked(RegistryError):
    pass


class EventKind(enum.Enum):
    TASK_TYPE_REGISTERED = "task_type_registered"
    ITEM_CLASSIFIED = "item_classified"
    OWNER_ASSIGNED = "owner_assigned"
    OUTCOME_RECORDED = "outcome_recorded"
    TRANSITION_APPLIED = "transition_applied"
    PROVENANCE_RECORDED = "provenance_recorded"
    VIOLATION_NOTED = "violation_noted"
    HUMAN_ONLY_CYCLE_COMPLETED = "human_only_cycle_completed"
    INJECTION_PLANTED = "injection_planted"
    INJECTION_RESOLVED = "injection_resolved"
    SESSION_EVENT = "session_event"
    SAMPLING_ADJUSTED = "sampling_adjusted"
    RATING_DOWNGRADED = "rating_downgraded"
    ITEM_STATUS_CHANGED = "item_status_changed"
    INTEGRATION_VERIFIED = "integration_verified"
    DEFICIENCIES_RESOLVED = "deficiencies_resolved"
    DEMOTION_PROMPTED = "demotion_prompted"

    @property
    def wire(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value) -> "EventKind":
        for member in cls:
            if member.value == value or member is value:
                return member
        raise SchemaViolation(f"unknown event kind: {value!r}")


@dataclass(frozen=True)
class RegistryEvent:
    event_id: int
    timestamp: str
    actor: str
    kind: EventKind
    payload: dict

    def to_line(self) -> str:
        return canonical_json(
            {
                "event_id": self.event_id,
                "timestamp": self.timestamp,
                "actor": self.actor,
                "kind": self.kind.wire,
                "payload": self.payload,
            }
        )

    @classmethod
    def from_raw(cls, raw: dict) -> "RegistryEvent":
        for key in ("event_id", "timestamp", "actor", "kind", "payload"):
            if key not in raw:
                raise SchemaViolation(f"event missing field: {key}")
        extra = set(raw) - {"event_id", "timestamp", "actor", "kind", "payload"}
        if extra:
            raise SchemaViolation(f"event has unknown fields: {sorted(extra)}")
        event_id = raw["event_id"]
        if not isinstance(event_id, int) or event_id < 1:
            raise SchemaViolation(f"event_id must be a positive integer, got {event_id!r}")
        if not isinstance(raw["timestamp"], str) or not raw["timestamp"]:
            raise SchemaViolation("timestamp must be a non-empty string")
        if not isinstance(raw["actor"], str) or not raw["actor"]:
            raise SchemaViolation("actor is required on every event")
        if not isinstance(raw["payload"], dict):
            raise SchemaViolation("payload must be an object")
        return cls(
            event_id=event_id,
            timestamp=raw["timestamp"],
            actor=raw["actor"],
            kind=EventKind.parse(raw["kind"]),
            payload=raw["payload"],
        )


# --------------------------------------------------------------------------
# Folded state


@dataclass
class TaskTypeState:
    task_type_id: str
    name: str
    domain: str
    registered_cycle: int
    current_tier: Optional[AutonomyTier] = None
    latest_assessment: Optional[Assessment] = None
    ledger: EvidenceLedger = None  # type: ignore[assignment]
    sampling: SamplingPlan = None  # type: ignore[assignment]
    last_human_only_cycle: Optional[int] = None
    rating_floor: CapabilityRating = CapabilityRating.UNPROVEN
    rating_reset_cycle: int = 0
    declared_rating: Optional[CapabilityRating] = None
    downgraded: bool = False
    # per-cycle accumulation before summaries materialize
    cycle_counts: dict = field(default_factory=dict)

    def derived_rating(self, policy: TransitionPolicy) -> CapabilityRating:
        """Rating the evidence supports: clean-cycle credit since the last
        downgrade, never below the rating the last downgrade declared."""
        sliced = self.ledger.since_cycle(self.rating_reset_cycle)
        return derive_capability_rating(sliced, policy, floor=self.rating_floor)


@dataclass
class ItemState:
    item_id: str
    title: str
    task_type_id: Optional[str]
    tier: Optional[AutonomyTier]
    default_tier: Optional[AutonomyTier] = None
    matched_rule: str = ""
    rationale: str = ""
    claimed_capability: Optional[CapabilityRating] = None
    assessment: Optional[Assessment] = None
    owner: Optional[str] = None
    status: str = "planned"
    baseline_points: Optional[float] = None
    classified_cycle: Optional[int] = None
    provenance: Optional[dict] = None
    integration_verified: bool = False
    deficiency_resolution: Optional[dict] = None
    outcome_event_ids: list = field(default_factory=list)


class RegistrySnapshot:
    """All derived state at one point in the log.

    Treat instances as values: the store hands out folded copies and
    nothing here should be mutated by callers.
    """

    def __init__(self, policy: TransitionPolicy, sampling_defaults: SamplingDefaults):
        self.policy = policy
        self.sampling_defaults = sampling_defaults
        self.schema_version = SCHEMA_VERSION
        self.last_event_id = 0
        self.current_cycle = 0
        self.task_types: dict[str, TaskTypeState] = {}
        self.items: dict[str, ItemState] = {}
        self.outcomes: list[OutcomeRecord] = []
        self.transitions: list[dict] = []
        self.violations: list[dict] = []
        self.sessions: dict[str, Session] = {}
        self.campaigns: dict[str, InjectionCampaign] = {}
        self.demotion_prompts: list[dict] = []

    # -- queries used across the package

    def open_session_for(self, owner: str) -> Optional[Session]:
        for session in self.sessions.values():
            if session.owner == owner and session.open:
                return session
        return None

    def rating_of(self, task_type_id: str) -> CapabilityRating:
        return self.task_types[task_type_id].derived_rating(self.policy)

    def ownership_gaps(self) -> list[str]:
        """Items at tier 2+ without exactly one owner; empty when healthy."""
        gaps = []
        for item in self.items.values():
            if item.tier is not None and item.tier.number >= 2 and not item.owner:
                gaps.append(item.item_id)
        return sorted(gaps)

    def board_metadata(self) -> dict:
        """The always-visible board surface, violations included."""
        return {
            "current_cycle": self.current_cycle,
            "task_types": {
                tt.task_type_id: {
                    "name": tt.name,
                    "tier": tt.current_tier.wire if tt.current_tier else None,
                    "rating": tt.derived_rating(self.policy).wire,
                    "sampling_rate": tt.sampling.rate,
                    "last_human_only_cycle": tt.last_human_only_cycle,
                }
                for tt in sorted(self.task_types.values(), key=lambda t: t.task_type_id)
            },
            "violations": [dict(v) for v in self.violations],
            "open_demotion_prompts": [dict(p) for p in self.demotion_prompts],
        }

    def to_document(self, include_hidden: bool = False) -> dict:
        """Full snapshot export; open campaigns keep their plants masked
        unless the caller asks for the auditor view."""
        campaigns = {}
        for campaign in self.campaigns.values():
            if campaign.closed or include_hidden:
                plants = [
                    {
                        "plant_id": p.plant_id,
                        "item_id": p.item_id,
                        "description": p.description,
                        "severity": p.severity.wire,
                        "cycle": p.cycle,
                    }
                    for p in campaign.plants
                ]
            else:
                plants = [{"plant_id": p.plant_id, "hidden": True} for p in campaign.plants]
            campaigns[campaign.campaign_id] = {
                "campaign_id": campaign.campaign_id,
                "opened_cycle": campaign.opened_cycle,
                "closed": campaign.closed,
                "closed_cycle": campaign.closed_cycle,
                "planted": plants,
                "detected_plant_ids": sorted(campaign.detected_plant_ids),
            }
        return {
            "schema_version": self.schema_version,
            "last_event_id": self.last_event_id,
            "current_cycle": self.current_cycle,
            "task_types": {
                tt.task_type_id: {
                    "task_type_id": tt.task_type_id,
                    "name": tt.name,
                    "domain": tt.domain,
                    "registered_cycle": tt.registered_cycle,
                    "tier": tt.current_tier.wire if tt.current_tier else None,
                    "rating": tt.derived_rating(self.policy).wire,
                    "assessment": tt.latest_assessment.to_payload() if tt.latest_assessment else None,
                    "sampling": {
                        "rate": tt.sampling.rate,
                        "basis": tt.sampling.basis.wire,
                        "history": [a.to_payload() for a in tt.sampling.history],
                    },
                    "last_human_only_cycle": tt.last_human_only_cycle,
                    "ledger": [c.to_payload() for c in tt.ledger.cycles],
                }
                for tt in sorted(self.task_types.values(), key=lambda t: t.task_type_id)
            },
            "items": {
                item.item_id: {
                    "item_id": item.item_id,
                    "title": item.title,
                    "task_type_id": item.task_type_id,
                    "tier": item.tier.wire if item.tier else None,
                    "default_tier": item.default_tier.wire if item.default_tier else None,
                    "matched_rule": item.matched_rule,
                    "rationale": item.rationale,
                    "assessment": item.assessment.to_payload() if item.assessment else None,
                    "owner": item.owner,
                    "status": item.status,
                    "baseline_points": item.baseline_points,
                    "classified_cycle": item.classified_cycle,
                    "provenance": item.provenance,
                    "integration_verified": item.integration_verified,
                    "deficiency_resolution": item.deficiency_resolution,
                    "outcome_event_ids": list(item.outcome_event_ids),
                }
                for item in sorted(self.items.values(), key=lambda i: i.item_id)
            },
            "outcomes": [
                {
                    "event_id": r.event_id,
                    "task_type_id": r.task_type_id,
                    "item_tier": r.item_tier.wire if r.item_tier else None,
                    **r.outcome.to_payload(),
                }
                for r in self.outcomes
            ],
            "transitions": [dict(t) for t in self.transitions],
            "board": self.board_metadata(),
            "sessions": {
                sid: session.to_payload() for sid, session in sorted(self.sessions.items())
            },
            "campaigns": campaigns,
        }

    def canonical(self) -> str:
        return canonical_json(self.to_document(include_hidden=True))


# --------------------------------------------------------------------------
# Payload validation (schema + state checks), one function per kind


def _req(payload: dict, key: str, types, where: str):
    if key not in payload:
        raise SchemaViolation(f"{where}: missing field {key!r}")
    value = payload[key]
    if types is not None and not isinstance(value, types):
        raise SchemaViolation(f"{where}: field {key!r} has wrong type")
    if isinstance(value, str) and not value:
        raise SchemaViolation(f"{where}: field {key!r} must be non-empty")
    return value


def _no_extras(payload: dict, allowed: set, where: str) -> None:
    extra = set(payload) - allowed
    if extra:
        raise SchemaViolation(f"{where}: unknown fields {sorted(extra)}")


def _cycle(payload: dict, where: str) -> int:
    cycle = _req(payload, "cycle", int, where)
    if isinstance(cycle, bool) or cycle < 0:
        raise SchemaViolation(f"{where}: cycle must be an integer >= 0")
    return cycle


def _known_task_type(snapshot: RegistrySnapshot, task_type_id: str, where: str) -> TaskTypeState:
    if task_type_id not in snapshot.task_types:
        raise SchemaViolation(f"{where}: unknown task type {task_type_id!r}")
    return snapshot.task_types[task_type_id]


def _known_item(snapshot: RegistrySnapshot, item_id: str, where: str) -> ItemState:
    if item_id not in snapshot.items:
        raise SchemaViolation(f"{where}: unknown item {item_id!r}")
    return snapshot.items[item_id]


def _validate_task_type_registered(snapshot, payload):
    where = "task_type_registered"
    _no_extras(payload, {"task_type_id", "name", "domain", "cycle", "note"}, where)
    task_type_id = _req(payload, "task_type_id", str, where)
    _req(payload, "name", str, where)
    domain = _req(payload, "domain", str, where)
    _cycle(payload, where)
    if domain not in TASK_DOMAINS:
        raise SchemaViolation(f"{where}: domain must be one of {TASK_DOMAINS}")
    if task_type_id in snapshot.task_types:
        raise SchemaViolation(f"{where}: task type {task_type_id!r} already registered")


def _validate_item_classified(snapshot, payload):
    where = "item_classified"
    _no_extras(
        payload,
        {
            "item_id",
            "title",
            "task_type_id",
            "cycle",
            "assessment",
            "default_tier",
            "applied_tier",
            "matched_rule",
            "rationale",
            "owner",
            "baseline_points",
        },
        where,
    )
    item_id = _req(payload, "item_id", str, where)
    _req(payload, "title", str, where)
    task_type_id = _req(payload, "task_type_id", str, where)
    _cycle(payload, where)
    _known_task_type(snapshot, task_type_id, where)
    if item_id in snapshot.items and snapshot.items[item_id].tier is not None:
        raise SchemaViolation(f"{where}: item {item_id!r} already classified")
    assessment_raw = _req(payload, "assessment", dict, where)
    try:
        Assessment.parse(assessment_raw)
    except (ValueError, TypeError) as exc:
        raise SchemaViolation(f"{where}: bad assessment: {exc}") from exc
    try:
        default_tier = AutonomyTier.parse(_req(payload, "default_tier", str, where))
        applied_tier = AutonomyTier.parse(_req(payload, "applied_tier", str, where))
    except ValueError as exc:
        raise SchemaViolation(f"{where}: {exc}") from exc
    _req(payload, "matched_rule", str, where)
    if applied_tier != default_tier and not payload.get("rationale"):
        raise SchemaViolation(
            f"{where}: overriding the default tier requires a rationale"
        )
    if applied_tier.number >= 2:
        owner = payload.get("owner")
        if not owner or not isinstance(owner, str):
            raise SchemaViolation(
                f"{where}: tier 2+ items must name exactly one accountable owner"
            )
    points = payload.get("baseline_points")
    if points is not None and (isinstance(points, bool) or not isinstance(points, (int, float)) or points <= 0):
        raise SchemaViolation(f"{where}: baseline_points must be a positive number")
    # after a recorded downgrade, capability claims cannot outrun the
    # evidence; before one, teams may bring external track records
    task_type = snapshot.task_types[task_type_id]
    if task_type.downgraded:
        claimed = Assessment.parse(assessment_raw).capability
        supported = task_type.derived_rating(snapshot.policy)
        if claimed > supported:
            raise SchemaViolation(
                f"{where}: claimed capability {claimed.wire} exceeds the "
                f"evidence-supported {supported.wire} after a downgrade"
            )


def _validate_owner_assigned(snapshot, payload):
    where = "owner_assigned"
    _no_extras(payload, {"item_id", "owner", "cycle", "note"}, where)
    item_id = _req(payload, "item_id", str, where)
    _req(payload, "owner", str, where)
    _cycle(payload, where)
    _known_item(snapshot, item_id, where)


def _validate_outcome_recorded(snapshot, payload):
    where = "outcome_recorded"
    _no_extras(
        payload,
        {
            "item_id",
            "reviewer",
            "cycle",
            "detected_in",
            "first_pass_accept",
            "findings",
            "checklist_results",
            "review_minutes",
        },
        where,
    )
    item_id = _req(payload, "item_id", str, where)
    item = _known_item(snapshot, item_id, where)
    if item.tier is None:
        raise SchemaViolation(
            f"{where}: item {item_id!r} has no classification; classify before recording outcomes"
        )
    try:
        outcome = ValidationOutcome.from_payload(payload)
        outcome.validate(item.tier)
    except (GovernanceError, ValueError, KeyError, TypeError) as exc:
        raise SchemaViolation(f"{where}: {exc}") from exc


def _validate_transition_applied(snapshot, payload):
    where = "transition_applied"
    _no_extras(
        payload,
        {
            "task_type_id",
            "direction",
            "from_tier",
            "to_tier",
            "trigger",
            "cycle",
            "evidence_window",
            "rationale",
            "capacity_confirmed",
        },
        where,
    )
    task_type_id = _req(payload, "task_type_id", str, where)
    task_type = _known_task_type(snapshot, task_type_id, where)
    direction = _req(payload, "direction", str, where)
    cycle = _cycle(payload, where)
    try:
        from_tier = AutonomyTier.parse(_req(payload, "from_tier", str, where))
        to_tier = AutonomyTier.parse(_req(payload, "to_tier", str, where))
        trigger = TransitionTrigger(_req(payload, "trigger", str, where))
    except ValueError as exc:
        raise SchemaViolation(f"{where}: {exc}") from exc
    if task_type.current_tier is None:
        raise SchemaViolation(f"{where}: task type has no tier yet; classify first")
    if from_tier is not task_type.current_tier:
        raise SchemaViolation(
            f"{where}: from_tier {from_tier.wire} does not match current "
            f"{task_type.current_tier.wire}"
        )
    if direction == "promotion":
        if trigger is not TransitionTrigger.EVIDENCE_REVIEW:
            raise SchemaViolation(f"{where}: promotions require the evidence_review trigger")
        if to_tier.number != from_tier.number + 1:
            raise SchemaViolation(f"{where}: promotions move exactly one tier")
        if not payload.get("capacity_confirmed", False):
            raise SchemaViolation(f"{where}: promotions must confirm validation capacity")
        eligibility = check_promotion(
            from_tier, task_type.ledger, snapshot.policy, capacity_ok=True
        )
        if not eligibility.eligible:
            raise SchemaViolation(
                f"{where}: promotion not supported by ledger evidence: "
                + "; ".join(eligibility.blockers)
            )
    elif direction == "demotion":
        if trigger is TransitionTrigger.EVIDENCE_REVIEW:
            raise SchemaViolation(f"{where}: evidence_review is not a demotion trigger")
        if from_tier is AutonomyTier.AI_RESTRICTED:
            raise SchemaViolation(f"{where}: already ai_restricted")
        depth = (
            snapshot.policy.critical_error_demotion_depth
            if trigger is TransitionTrigger.CRITICAL_ERROR
            else 1
        )
        expected = from_tier.step_down(depth)
        if to_tier is not expected:
            raise SchemaViolation(
                f"{where}: {trigger.wire} demotion from {from_tier.wire} must land on "
                f"{expected.wire}, not {to_tier.wire}"
            )
    else:
        raise SchemaViolation(f"{where}: direction must be promotion or demotion")
    if cycle < snapshot.current_cycle and direction == "promotion":
        raise SchemaViolation(f"{where}: promotions cannot be backdated")


def _validate_provenance_recorded(snapshot, payload):
    where = "provenance_recorded"
    _no_extras(
        payload,
        {"item_id", "producer", "tool", "prompt_ref", "generated_at", "cycle", "note"},
        where,
    )
    item_id = _req(payload, "item_id", str, where)
    producer = _req(payload, "producer", str, where)
    _cycle(payload, where)
    _known_item(snapshot, item_id, where)
    if producer not in PROVENANCE_PRODUCERS:
        raise SchemaViolation(f"{where}: producer must be one of {PROVENANCE_PRODUCERS}")


def _validate_violation_noted(snapshot, payload):
    where = "violation_noted"
    _no_extras(payload, {"note", "person", "task_type_id", "item_id", "cycle"}, where)
    _req(payload, "note", str, where)
    _cycle(payload, where)
    if payload.get("task_type_id"):
        _known_task_type(snapshot, payload["task_type_id"], where)
    if payload.get("item_id"):
        _known_item(snapshot, payload["item_id"], where)


def _validate_human_only_cycle(snapshot, payload):
    where = "human_only_cycle_completed"
    _no_extras(payload, {"task_type_id", "cycle", "note", "participants"}, where)
    task_type_id = _req(payload, "task_type_id", str, where)
    _cycle(payload, where)
    _known_task_type(snapshot, task_type_id, where)


def _validate_injection_planted(snapshot, payload):
    where = "injection_planted"
    _no_extras(
        payload,
        {"campaign_id", "plant_id", "item_id", "description", "severity", "cycle"},
        where,
    )
    campaign_id = _req(payload, "campaign_id", str, where)
    plant_id = _req(payload, "plant_id", str, where)
    item_id = _req(payload, "item_id", str, where)
    _req(payload, "description", str, where)
    _cycle(payload, where)
    try:
        Severity.parse(_req(payload, "severity", str, where))
    except ValueError as exc:
        raise SchemaViolation(f"{where}: {exc}") from exc
    _known_item(snapshot, item_id, where)
    campaign = snapshot.campaigns.get(campaign_id)
    if campaign is not None:
        if campaign.closed:
            raise SchemaViolation(f"{where}: campaign {campaign_id!r} is closed")
        if any(p.plant_id == plant_id for p in campaign.plants):
            raise SchemaViolation(f"{where}: duplicate plant {plant_id!r}")


def _validate_injection_resolved(snapshot, payload):
    where = "injection_resolved"
    _no_extras(payload, {"campaign_id", "cycle", "detected_plant_ids", "note"}, where)
    campaign_id = _req(payload, "campaign_id", str, where)
    _cycle(payload, where)
    campaign = snapshot.campaigns.get(campaign_id)
    if campaign is None:
        raise SchemaViolation(f"{where}: unknown campaign {campaign_id!r}")
    if campaign.closed:
        raise SchemaViolation(f"{where}: campaign {campaign_id!r} already closed")
    detected = payload.get("detected_plant_ids", [])
    if not isinstance(detected, list):
        raise SchemaViolation(f"{where}: detected_plant_ids must be a list")
    known = {p.plant_id for p in campaign.plants}
    unknown = [p for p in detected if p not in known]
    if unknown:
        raise SchemaViolation(f"{where}: unknown plant ids {unknown}")


_SESSION_ACTION_FIELDS = {
    "opened": {"owner", "task_type_id", "item_id", "checkpoint_interval_minutes", "attested_notes"},
    "checkpoint": {"at_minutes", "note"},
    "pivot": {"at_minutes", "description", "significant", "adopted"},
    "merit_review": {"at_minutes", "pivot_index", "rationale"},
    "counterargument": {"at_minutes", "text"},
    "finalized": {"at_minutes", "summary"},
    "abandoned": {"at_minutes", "reason"},
}


def _validate_session_event(snapshot, payload):
    where = "session_event"
    _req(payload, "session_id", str, where)
    action = _req(payload, "action", str, where)
    _cycle(payload, where)
    if action not in _SESSION_ACTION_FIELDS:
        raise SchemaViolation(f"{where}: unknown action {action!r}")
    _no_extras(
        payload,
        {"session_id", "action", "cycle"} | _SESSION_ACTION_FIELDS[action],
        f"{where}:{action}",
    )
    session = snapshot.sessions.get(payload["session_id"])
    if action == "opened":
        owner = payload.get("owner")
        if isinstance(owner, str) and owner:
            already = snapshot.open_session_for(owner)
            if already is not None:
                raise SchemaViolation(
                    f"{where}: {owner} already has open session {already.session_id}"
                )
    try:
        coproduction.apply_session_action(session, action, payload, payload["cycle"])
    except SessionError as exc:
        raise SchemaViolation(f"{where}: {exc}") from exc


def _validate_sampling_adjusted(snapshot, payload):
    where = "sampling_adjusted"
    _no_extras(
        payload, {"task_type_id", "cycle", "old_rate", "new_rate", "basis", "reason"}, where
    )
    task_type_id = _req(payload, "task_type_id", str, where)
    task_type = _known_task_type(snapshot, task_type_id, where)
    _cycle(payload, where)
    old_rate = _req(payload, "old_rate", (int, float), where)
    new_rate = _req(payload, "new_rate", (int, float), where)
    if not 0.0 <= new_rate <= 1.0:
        raise SchemaViolation(f"{where}: new_rate must be in [0, 1]")
    try:
        SamplingBasis.parse(_req(payload, "basis", str, where))
    except ValueError as exc:
        raise SchemaViolation(f"{where}: {exc}") from exc
    if abs(task_type.sampling.rate - old_rate) > 1e-9:
        raise SchemaViolation(
            f"{where}: old_rate {old_rate} does not match current plan rate "
            f"{task_type.sampling.rate}"
        )


def _validate_rating_downgraded(snapshot, payload):
    where = "rating_downgraded"
    _no_extras(payload, {"task_type_id", "cycle", "old_rating", "new_rating", "reason"}, where)
    task_type_id = _req(payload, "task_type_id", str, where)
    task_type = _known_task_type(snapshot, task_type_id, where)
    _cycle(payload, where)
    try:
        old_rating = CapabilityRating.parse(_req(payload, "old_rating", str, where))
        new_rating = CapabilityRating.parse(_req(payload, "new_rating", str, where))
    except ValueError as exc:
        raise SchemaViolation(f"{where}: {exc}") from exc
    if new_rating >= old_rating:
        raise SchemaViolation(
            f"{where}: ratings only move down by decree; upward movement is derived from evidence"
        )
    # old_rating must match the rating currently in force: the one the team
    # last declared (classification claim or prior downgrade), or failing
    # that the evidence-derived one
    current = (
        task_type.declared_rating
        if task_type.declared_rating is not None
        else task_type.derived_rating(snapshot.policy)
    )
    if old_rating is not current:
        raise SchemaViolation(
            f"{where}: old_rating {old_rating.wire} does not match the rating "
            f"in force ({current.wire})"
        )


def _validate_item_status_changed(snapshot, payload):
    where = "item_status_changed"
    _no_extras(payload, {"item_id", "status", "cycle", "title", "note"}, where)
    _req(payload, "item_id", str, where)
    status = _req(payload, "status", str, where)
    _cycle(payload, where)
    if status not in ITEM_STATUSES:
        raise SchemaViolation(f"{where}: status must be one of {ITEM_STATUSES}")
    # unknown item ids are allowed here on purpose: starting work without a
    # classification is exactly the failure mode lint must be able to see


def _validate_integration_verified(snapshot, payload):
    where = "integration_verified"
    _no_extras(payload, {"item_id", "cycle", "suite", "note"}, where)
    item_id = _req(payload, "item_id", str, where)
    _cycle(payload, where)
    _known_item(snapshot, item_id, where)


def _validate_deficiencies_resolved(snapshot, payload):
    where = "deficiencies_resolved"
    _no_extras(payload, {"item_id", "cycle", "resolution", "note"}, where)
    item_id = _req(payload, "item_id", str, where)
    resolution = _req(payload, "resolution", str, where)
    _cycle(payload, where)
    _known_item(snapshot, item_id, where)
    if resolution not in ("fixed", "accepted_risk"):
        raise SchemaViolation(f"{where}: resolution must be fixed or accepted_risk")
    if resolution == "accepted_risk" and not payload.get("note"):
        raise SchemaViolation(f"{where}: accepting risk requires a written note")


def _validate_demotion_prompted(snapshot, payload):
    where = "demotion_prompted"
    _no_extras(payload, {"task_type_id", "cycle", "reason", "finding_event_id"}, where)
    task_type_id = _req(payload, "task_type_id", str, where)
    _req(payload, "reason", str, where)
    _cycle(payload, where)
    _known_task_type(snapshot, task_type_id, where)


_VALIDATORS: dict[EventKind, Callable[[RegistrySnapshot, dict], None]] = {
    EventKind.TASK_TYPE_REGISTERED: _validate_task_type_registered,
    EventKind.ITEM_CLASSIFIED: _validate_item_classified,
    EventKind.OWNER_ASSIGNED: _validate_owner_assigned,
    EventKind.OUTCOME_RECORDED: _validate_outcome_recorded,
    EventKind.TRANSITION_APPLIED: _validate_transition_applied,
    EventKind.PROVENANCE_RECORDED: _validate_provenance_recorded,
    EventKind.VIOLATION_NOTED: _validate_violation_noted,
    EventKind.HUMAN_ONLY_CYCLE_COMPLETED: _validate_human_only_cycle,
    EventKind.INJECTION_PLANTED: _validate_injection_planted,
    EventKind.INJECTION_RESOLVED: _validate_injection_resolved,
    EventKind.SESSION_EVENT: _validate_session_event,
    EventKind.SAMPLING_ADJUSTED: _validate_sampling_adjusted,
    EventKind.RATING_DOWNGRADED: _validate_rating_downgraded,
    EventKind.ITEM_STATUS_CHANGED: _validate_item_status_changed,
    EventKind.INTEGRATION_VERIFIED: _validate_integration_verified,
    EventKind.DEFICIENCIES_RESOLVED: _validate_deficiencies_resolved,
    EventKind.DEMOTION_PROMPTED: _validate_demotion_prompted,
}


def validate_event(snapshot: RegistrySnapshot, event: RegistryEvent) -> None:
    if event.event_id <= snapshot.last_event_id:
        raise SchemaViolation(
            f"event_id {event.event_id} not greater than {snapshot.last_event_id}"
        )
    _VALIDATORS[event.kind](snapshot, event.payload)


# --------------------------------------------------------------------------
# Folding


def _touch_cycle(snapshot: RegistrySnapshot, cycle: int) -> None:
    if cycle > snapshot.current_cycle:
        snapshot.current_cycle = cycle


def _materialize_cycle(task_type: TaskTypeState, cycle: int) -> None:
    """Roll accumulated outcome counts for a cycle into the ledger."""
    counts = task_type.cycle_counts.get(cycle)
    if counts is None:
        return
    summary = CycleSummary(
        cycle_index=cycle,
        tier_during_cycle=counts["tier"],
        outputs_validated=counts["validated"],
        outputs_with_major_or_critical=counts["flagged"],
        critical_count=counts["criticals"],
        sampled_fraction=counts["sampled_fraction"],
    )
    existing = [c for c in task_type.ledger.cycles if c.cycle_index != cycle]
    existing.append(summary)
    existing.sort(key=lambda c: c.cycle_index)
    task_type.ledger = EvidenceLedger(task_type.task_type_id, existing)


def fold_event(snapshot: RegistrySnapshot, event: RegistryEvent) -> None:
    """Apply one validated event to the snapshot, in place."""
    payload = event.payload
    kind = event.kind
    snapshot.last_event_id = event.event_id

    if kind is EventKind.TASK_TYPE_REGISTERED:
        task_type_id = payload["task_type_id"]
        snapshot.task_types[task_type_id] = TaskTypeState(
            task_type_id=task_type_id,
            name=payload["name"],
            domain=payload["domain"],
            registered_cycle=payload["cycle"],
            ledger=EvidenceLedger(task_type_id),
            sampling=SamplingPlan.initial(task_type_id, snapshot.sampling_defaults),
        )
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.ITEM_CLASSIFIED:
        assessment = Assessment.parse(payload["assessment"])
        applied = AutonomyTier.parse(payload["applied_tier"])
        item_id = payload["item_id"]
        stub = snapshot.items.get(item_id)
        item = ItemState(
            item_id=item_id,
            title=payload["title"],
            task_type_id=payload["task_type_id"],
            tier=applied,
            default_tier=AutonomyTier.parse(payload["default_tier"]),
            matched_rule=payload["matched_rule"],
            rationale=payload.get("rationale", ""),
            claimed_capability=assessment.capability,
            assessment=assessment,
            owner=payload.get("owner"),
            status=stub.status if stub else "planned",
            baseline_points=payload.get("baseline_points"),
            classified_cycle=payload["cycle"],
        )
        snapshot.items[item_id] = item
        task_type = snapshot.task_types[payload["task_type_id"]]
        task_type.latest_assessment = assessment
        task_type.declared_rating = assessment.capability
        # the type's operating tier follows the most recent classification,
        # with one exception: overriding a single item down to ai_restricted
        # schedules human-only practice, it does not re-rate the type
        default = AutonomyTier.parse(payload["default_tier"])
        item_level_restriction = (
            applied is AutonomyTier.AI_RESTRICTED
            and default is not AutonomyTier.AI_RESTRICTED
        )
        if not item_level_restriction:
            task_type.current_tier = applied
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.OWNER_ASSIGNED:
        snapshot.items[payload["item_id"]].owner = payload["owner"]
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.OUTCOME_RECORDED:
        outcome = ValidationOutcome.from_payload(payload)
        item = snapshot.items[outcome.item_id]
        item.outcome_event_ids.append(event.event_id)
        task_type = snapshot.task_types[item.task_type_id]
        record = OutcomeRecord(
            event_id=event.event_id,
            task_type_id=item.task_type_id,
            item_tier=item.tier,
            outcome=outcome,
        )
        snapshot.outcomes.append(record)
        counts = task_type.cycle_counts.setdefault(
            outcome.cycle,
            {
                "tier": item.tier if item.tier is not None else AutonomyTier.TIER1,
                "validated": 0,
                "flagged": 0,
                "criticals": 0,
                "sampled_fraction": task_type.sampling.rate
                if item.tier in (AutonomyTier.TIER3, AutonomyTier.TIER4)
                else None,
            },
        )
        counts["validated"] += 1
        worst = outcome.worst_severity
        if worst is not None and worst >= Severity.MAJOR:
            counts["flagged"] += 1
        if worst is Severity.CRITICAL:
            counts["criticals"] += 1
        _materialize_cycle(task_type, outcome.cycle)
        _touch_cycle(snapshot, outcome.cycle)

    elif kind is EventKind.TRANSITION_APPLIED:
        task_type = snapshot.task_types[payload["task_type_id"]]
        task_type.current_tier = AutonomyTier.parse(payload["to_tier"])
        snapshot.transitions.append(
            {
                "event_id": event.event_id,
                "task_type_id": payload["task_type_id"],
                "direction": payload["direction"],
                "from_tier": payload["from_tier"],
                "to_tier": payload["to_tier"],
                "trigger": payload["trigger"],
                "cycle": payload["cycle"],
                "requested_by": event.actor,
                "rationale": payload.get("rationale", ""),
            }
        )
        if payload["direction"] == "demotion":
            snapshot.demotion_prompts = [
                p
                for p in snapshot.demotion_prompts
                if p["task_type_id"] != payload["task_type_id"]
            ]
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.PROVENANCE_RECORDED:
        item = snapshot.items[payload["item_id"]]
        item.provenance = {
            "producer": payload["producer"],
            "tool": payload.get("tool"),
            "prompt_ref": payload.get("prompt_ref"),
            "generated_at": payload.get("generated_at"),
            "note": payload.get("note"),
        }
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.VIOLATION_NOTED:
        snapshot.violations.append(
            {
                "event_id": event.event_id,
                "note": payload["note"],
                "person": payload.get("person"),
                "task_type_id": payload.get("task_type_id"),
                "item_id": payload.get("item_id"),
                "cycle": payload["cycle"],
                "recorded_by": event.actor,
            }
        )
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.HUMAN_ONLY_CYCLE_COMPLETED:
        task_type = snapshot.task_types[payload["task_type_id"]]
        cycle = payload["cycle"]
        if task_type.last_human_only_cycle is None or cycle > task_type.last_human_only_cycle:
            task_type.last_human_only_cycle = cycle
        _touch_cycle(snapshot, cycle)

    elif kind is EventKind.INJECTION_PLANTED:
        campaign_id = payload["campaign_id"]
        plant = PlantedError(
            plant_id=payload["plant_id"],
            item_id=payload["item_id"],
            description=payload["description"],
            severity=Severity.parse(payload["severity"]),
            cycle=payload["cycle"],
        )
        campaign = snapshot.campaigns.get(campaign_id)
        if campaign is None:
            campaign = InjectionCampaign(
                campaign_id=campaign_id, plants=(plant,), opened_cycle=payload["cycle"]
            )
        else:
            campaign = InjectionCampaign(
                campaign_id=campaign_id,
                plants=campaign.plants + (plant,),
                opened_cycle=campaign.opened_cycle,
            )
        snapshot.campaigns[campaign_id] = campaign
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.INJECTION_RESOLVED:
        campaign = snapshot.campaigns[payload["campaign_id"]]
        snapshot.campaigns[payload["campaign_id"]] = InjectionCampaign(
            campaign_id=campaign.campaign_id,
            plants=campaign.plants,
            opened_cycle=campaign.opened_cycle,
            closed=True,
            closed_cycle=payload["cycle"],
            detected_plant_ids=frozenset(payload.get("detected_plant_ids", [])),
        )
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.SESSION_EVENT:
        session_id = payload["session_id"]
        session = snapshot.sessions.get(session_id)
        snapshot.sessions[session_id] = coproduction.apply_session_action(
            session, payload["action"], payload, payload["cycle"]
        )
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.SAMPLING_ADJUSTED:
        task_type = snapshot.task_types[payload["task_type_id"]]
        adjustment = SamplingAdjustment(
            cycle=payload["cycle"],
            old_rate=float(payload["old_rate"]),
            new_rate=float(payload["new_rate"]),
            basis=SamplingBasis.parse(payload["basis"]),
            reason=payload.get("reason", ""),
        )
        task_type.sampling = task_type.sampling.with_adjustment(adjustment)
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.RATING_DOWNGRADED:
        task_type = snapshot.task_types[payload["task_type_id"]]
        new_rating = CapabilityRating.parse(payload["new_rating"])
        # wipe accumulated credit; the declared rating is the new floor the
        # type re-earns evidence from
        task_type.rating_floor = new_rating
        task_type.rating_reset_cycle = payload["cycle"] + 1
        task_type.declared_rating = new_rating
        task_type.downgraded = True
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.ITEM_STATUS_CHANGED:
        item_id = payload["item_id"]
        item = snapshot.items.get(item_id)
        if item is None:
            item = ItemState(
                item_id=item_id,
                title=payload.get("title", item_id),
                task_type_id=None,
                tier=None,
            )
            snapshot.items[item_id] = item
        item.status = payload["status"]
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.INTEGRATION_VERIFIED:
        snapshot.items[payload["item_id"]].integration_verified = True
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.DEFICIENCIES_RESOLVED:
        snapshot.items[payload["item_id"]].deficiency_resolution = {
            "resolution": payload["resolution"],
            "note": payload.get("note", ""),
            "cycle": payload["cycle"],
        }
        _touch_cycle(snapshot, payload["cycle"])

    elif kind is EventKind.DEMOTION_PROMPTED:
        snapshot.demotion_prompts.append(
            {
                "event_id": event.event_id,
                "task_type_id": payload["task_type_id"],
                "reason": payload["reason"],
                "cycle": payload["cycle"],
                "finding_event_id": payload.get("finding_event_id"),
            }
        )
        _touch_cycle(snapshot, payload["cycle"])

    else:  # pragma: no cover
        raise SchemaViolation(f"fold does not handle kind {kind}")


@dataclass
class ReplayReport:
    snapshot: RegistrySnapshot
    events: list[RegistryEvent]
    skipped: list[dict]


def replay(
    lines: Iterable[str],
    policy: Optional[TransitionPolicy] = None,
    sampling_defaults: Optional[SamplingDefaults] = None,
    skip_corrupt: bool = False,
) -> ReplayReport:
    """Fold a full log into a snapshot.

    Replay halts on the first corrupt line by raising CorruptLog; with
    ``skip_corrupt`` it records the problem and keeps going, which is the
    explicit recovery mode, never the default.
    """
    policy = policy or TransitionPolicy.default()
    sampling_defaults = sampling_defaults or SamplingDefaults()
    snapshot = RegistrySnapshot(policy, sampling_defaults)
    events: list[RegistryEvent] = []
    skipped: list[dict] = []
    header_seen = False

    for line_number, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            problem = CorruptLog(f"unparseable JSON: {exc.msg}", line_number)
            if skip_corrupt:
                skipped.append({"line": line_number, "error": str(problem)})
                continue
            raise problem from exc
        if not header_seen:
            if not isinstance(raw, dict) or raw.get("kind") != "header":
                raise CorruptLog("first line must be the schema header", line_number)
            if raw.get("schema_version") != SCHEMA_VERSION:
                raise CorruptLog(
                    f"unsupported schema_version {raw.get('schema_version')!r}", line_number
                )
            header_seen = True
            continue
        try:
            event = RegistryEvent.from_raw(raw)
            validate_event(snapshot, event)
            fold_event(snapshot, event)
        except (SchemaViolation, GovernanceError, ValueError, KeyError, TypeError) as exc:
            event_id = raw.get("event_id") if isinstance(raw, dict) else None
            problem = CorruptLog(str(exc), line_number, event_id)
            if skip_corrupt:
                skipped.append(
                    {"line": line_number, "event_id": event_id, "error": str(exc)}
                )
                continue
            raise problem from exc
        events.append(event)
    if not header_seen:
        raise CorruptLog("log has no header line", 1)
    return ReplayReport(snapshot=snapshot, events=events, skipped=skipped)


# --------------------------------------------------------------------------
# The store


def _header_line() -> str:
    return canonical_json(
        {"kind": "header", "schema_version": SCHEMA_VERSION, "format": "jsonl"}
    )


class RegistryStore:
    """Single-writer append-only store over one JSONL file.

    Opening for write takes an exclusive advisory lock on a sidecar lock
    file; a second writer gets RegistryLocked immediately. Readers replay
    the file without locking. Appended events are flushed and fsynced
    before the call returns.
    """

    def __init__(
        self,
        path: Path | str,
        policy: Optional[TransitionPolicy] = None,
        sampling_defaults: Optional[SamplingDefaults] = None,
        *,
        writable: bool = True,
        skip_corrupt: bool = False,
    ):
        self.path = Path(path)
        self.policy = policy or TransitionPolicy.default()
        self.sampling_defaults = sampling_defaults or SamplingDefaults()
        self._writable = writable
        self._lock_handle: Optional[io.IOBase] = None
        self._append_handle = None

        if writable:
            self._acquire_lock()
        try:
            if not self.path.exists():
                if not writable:
                    raise RegistryMissing(f"no registry at {self.path}")
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("w", encoding="utf-8") as handle:
                    handle.write(_header_line() + "\n")
                    handle.flush()
                    os.fsync(handle.fileno())
            with self.path.open("r", encoding="utf-8") as handle:
                report = replay(
                    handle, self.policy, self.sampling_defaults, skip_corrupt=skip_corrupt
                )
        except BaseException:
            self._release_lock()
            raise
        self._snapshot = report.snapshot
        self._events = report.events
        self.skipped = report.skipped
        if writable:
            self._append_handle = self.path.open("a", encoding="utf-8")

    # -- locking

    def _lock_path(self) -> Path:
        return self.path.with_suffix(self.path.suffix + ".lock")

    def _acquire_lock(self) -> None:
        self._lock_path().parent.mkdir(parents=True, exist_ok=True)
        handle = self._lock_path().open("a+")
        try:
            fcntl.flock(handle.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            handle.close()
            raise RegistryLocked(
                f"{self.path} already has a writer; the registry is single-writer"
            ) from None
        self._lock_handle = handle

    def _release_lock(self) -> None:
        if self._lock_handle is not None:
            try:
                fcntl.flock(self._lock_handle.fileno(), fcntl.LOCK_UN)
            finally:
                self._lock_handle.close()
                self._lock_handle = None

    def close(self) -> None:
        if self._append_handle is not None:
            self._append_handle.close()
            self._append_handle = None
        self._release_lock()

    def __enter__(self) -> "RegistryStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- core operations

    @property
    def snapshot(self) -> RegistrySnapshot:
        return self._snapshot

    @property
    def events(self) -> list[RegistryEvent]:
        return list(self._events)

    @property
    def next_event_id(self) -> int:
        return self._snapshot.last_event_id + 1

    def append(
        self, *, actor: str, kind: EventKind | str, payload: dict, timestamp: str
    ) -> RegistryEvent:
        """Validate, persist, and fold one event; returns it with its id."""
        if not self._writable or self._append_handle is None:
            raise RegistryError("store opened read-only")
        # envelope checks mirror from_raw so handcrafted appends fail the same way
        if not isinstance(actor, str) or not actor:
            raise SchemaViolation("actor is required on every event")
        if not isinstance(timestamp, str) or not timestamp:
            raise SchemaViolation("timestamp is required; it is recorded verbatim")
        # normalize through canonical JSON so the folded payload is
        # byte-identical to what a later replay will parse
        try:
            normalized = json.loads(canonical_json(payload))
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"payload is not canonically serializable: {exc}") from exc
        event = RegistryEvent(
            event_id=self.next_event_id,
            timestamp=timestamp,
            actor=actor,
            kind=EventKind.parse(kind),
            payload=normalized,
        )
        validate_event(self._snapshot, event)
        self._append_handle.write(event.to_line() + "\n")
        self._append_handle.flush()
        os.fsync(self._append_handle.fileno())
        fold_event(self._snapshot, event)
        self._events.append(event)
        return event

    def refold(self) -> RegistrySnapshot:
        """Replay the file from scratch; used by tests to prove determinism."""
        with self.path.open("r", encoding="utf-8") as handle:
            report = replay(handle, self.policy, self.sampling_defaults)
        return report.snapshot


# --------------------------------------------------------------------------
# Queries and exports

QUERY_KEYS = ("kind", "task_type", "owner", "sprint", "tier", "item")


def query_events(
    snapshot: RegistrySnapshot, events: Iterable[RegistryEvent], **filters
) -> list[RegistryEvent]:
    """Filter events by any combination of supported keys.

    Pure and stable: results keep event-id order. Owner and tier filters
    resolve through the item involved when the payload does not carry the
    field itself.
    """
    unknown = set(filters) - set(QUERY_KEYS)
    if unknown:
        raise ValueError(f"unsupported query keys: {sorted(unknown)}")

    def item_of(event: RegistryEvent) -> Optional[ItemState]:
        item_id = event.payload.get("item_id")
        return snapshot.items.get(item_id) if item_id else None

    def matches(event: RegistryEvent) -> bool:
        if "kind" in filters and event.kind.wire != str(filters["kind"]):
            return False
        if "item" in filters and event.payload.get("item_id") != filters["item"]:
            return False
        if "sprint" in filters and event.payload.get("cycle") != filters["sprint"]:
            return False
        if "task_type" in filters:
            wanted = filters["task_type"]
            direct = event.payload.get("task_type_id")
            via_item = item_of(event)
            if direct != wanted and (via_item is None or via_item.task_type_id != wanted):
                return False
        if "owner" in filters:
            wanted = filters["owner"]
            direct = event.payload.get("owner")
            via_item = item_of(event)
            if direct != wanted and (via_item is None or via_item.owner != wanted):
                return False
        if "tier" in filters:
            wanted = AutonomyTier.parse(filters["tier"]).wire
            payload_tier = event.payload.get("applied_tier") or event.payload.get("to_tier")
            via_item = item_of(event)
            item_tier = via_item.tier.wire if via_item and via_item.tier else None
            if payload_tier != wanted and item_tier != wanted:
                return False
        return True

    return sorted((e for e in events if matches(e)), key=lambda e: e.event_id)


def export_csv(snapshot: RegistrySnapshot, entity: str) -> str:
    """Flat CSV export for spreadsheets; entity picks the table."""
    import csv

    out = io.StringIO()
    writer = csv.writer(out)
    if entity == "task_types":
        writer.writerow(
            ["task_type_id", "name", "domain", "tier", "rating", "sampling_rate", "last_human_only_cycle"]
        )
        for tt in sorted(snapshot.task_types.values(), key=lambda t: t.task_type_id):
            writer.writerow(
                [
                    tt.task_type_id,
                    tt.name,
                    tt.domain,
                    tt.current_tier.wire if tt.current_tier else "",
                    tt.derived_rating(snapshot.policy).wire,
                    tt.sampling.rate,
                    tt.last_human_only_cycle if tt.last_human_only_cycle is not None else "",
                ]
            )
    elif entity == "items":
        writer.writerow(
            ["item_id", "title", "task_type_id", "tier", "owner", "status", "baseline_points", "cycle"]
        )
        for item in sorted(snapshot.items.values(), key=lambda i: i.item_id):
            writer.writerow(
                [
                    item.item_id,
                    item.title,
                    item.task_type_id or "",
                    item.tier.wire if item.tier else "",
                    item.owner or "",
                    item.status,
                    item.baseline_points if item.baseline_points is not None else "",
                    item.classified_cycle if item.classified_cycle is not None else "",
                ]
            )
    elif entity == "outcomes":
        writer.writerow(
            ["event_id", "item_id", "task_type_id", "cycle", "reviewer", "detected_in", "first_pass", "worst_severity"]
        )
        for record in snapshot.outcomes:
            worst = record.outcome.worst_severity
            writer.writerow(
                [
                    record.event_id,
                    record.outcome.item_id,
                    record.task_type_id,
                    record.outcome.cycle,
                    record.outcome.reviewer,
                    record.outcome.detected_in.wire,
                    record.outcome.first_pass_accept,
                    worst.wire if worst else "",
                ]
            )
    elif entity == "transitions":
        writer.writerow(
            ["event_id", "task_type_id", "direction", "from_tier", "to_tier", "trigger", "cycle", "requested_by"]
        )
        for t in snapshot.transitions:
            writer.writerow(
                [
                    t["event_id"],
                    t["task_type_id"],
                    t["direction"],
                    t["from_tier"],
                    t["to_tier"],
                    t["trigger"],
                    t["cycle"],
                    t["requested_by"],
                ]
            )
    elif entity == "violations":
        writer.writerow(["event_id", "cycle", "person", "task_type_id", "item_id", "note"])
        for v in snapshot.violations:
            writer.writerow(
                [
                    v["event_id"],
                    v["cycle"],
                    v.get("person") or "",
                    v.get("task_type_id") or "",
                    v.get("item_id") or "",
                    v["note"],
                ]
            )
    else:
        raise ValueError(
            "entity must be one of task_types, items, outcomes, transitions, violations"
        )
    return out.getvalue()
