"""Tier-aware planning: effort estimates, validation budgets, DoD, scaling.

The central correction this module encodes: delegating work does not make
its cost vanish, it moves the cost into specification and validation.
Estimates therefore never collapse to zero as autonomy rises, and
validation effort is budgeted explicitly against named human capacity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import TYPE_CHECKING, Optional

from .checklists import ChecklistTemplate
from .quality import Severity, checklist_coverage_ok
from .tiers import AutonomyTier, GovernanceError

if TYPE_CHECKING:  # pragma: no cover
    from .registry import RegistrySnapshot


class PlanningError(GovernanceError):
    pass


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves away from zero, decimal-exact."""
    return int(Decimal(f"{value:.9f}").quantize(Decimal("1"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class EffortModelParams:
    """Per-tier effort fractions of the human baseline.

    Tier 2 keeps specification and validation inside the published bounds:
    specification 15-30 percent, validation 30-60 percent of baseline.
    Tier 3's per-item validation fraction is scaled by the sampling rate.
    """

    tier2_specification_pct: float = 0.15
    tier2_generation_pct: float = 0.05
    tier2_validation_pct: float = 0.40
    tier3_monitoring_pct: float = 0.10
    tier3_item_validation_pct: float = 0.40
    tier3_exception_reserve_pct: float = 0.10
    tier4_boundary_pct: float = 0.05
    tier4_audit_pct: float = 0.05
    tier4_exception_pct: float = 0.05

    TIER2_SPEC_BOUNDS = (0.15, 0.30)
    TIER2_VALIDATION_BOUNDS = (0.30, 0.60)

    def validate(self) -> None:
        lo, hi = self.TIER2_SPEC_BOUNDS
        if not lo <= self.tier2_specification_pct <= hi:
            raise ValueError(f"tier2 specification fraction must be within [{lo}, {hi}]")
        lo, hi = self.TIER2_VALIDATION_BOUNDS
        if not lo <= self.tier2_validation_pct <= hi:
            raise ValueError(f"tier2 validation fraction must be within [{lo}, {hi}]")
        positives = (
            self.tier2_generation_pct,
            self.tier3_monitoring_pct,
            self.tier3_item_validation_pct,
            self.tier3_exception_reserve_pct,
            self.tier4_boundary_pct,
            self.tier4_audit_pct,
            self.tier4_exception_pct,
        )
        if any(p <= 0 or p > 1 for p in positives):
            raise ValueError("effort fractions must be in (0, 1]")

    def to_payload(self) -> dict:
        return {
            "tier2_specification_pct": self.tier2_specification_pct,
            "tier2_generation_pct": self.tier2_generation_pct,
            "tier2_validation_pct": self.tier2_validation_pct,
            "tier3_monitoring_pct": self.tier3_monitoring_pct,
            "tier3_item_validation_pct": self.tier3_item_validation_pct,
            "tier3_exception_reserve_pct": self.tier3_exception_reserve_pct,
            "tier4_boundary_pct": self.tier4_boundary_pct,
            "tier4_audit_pct": self.tier4_audit_pct,
            "tier4_exception_pct": self.tier4_exception_pct,
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "EffortModelParams":
        params = cls(**{k: float(v) for k, v in raw.items()})
        params.validate()
        return params


@dataclass(frozen=True)
class EffortBreakdown:
    """Points by activity. The total is rounded half-up; components are not."""

    specification: float
    generation: float
    validation: float
    integration: float
    total: int

    def __post_init__(self) -> None:
        parts = (self.specification, self.generation, self.validation, self.integration)
        if any(p < 0 for p in parts):
            raise ValueError("effort components must be >= 0")
        if self.total != round_half_up(sum(parts)):
            raise ValueError("total must be the half-up rounded sum of components")

    def to_payload(self) -> dict:
        return {
            "specification": self.specification,
            "generation": self.generation,
            "validation": self.validation,
            "integration": self.integration,
            "total": self.total,
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "EffortBreakdown":
        return cls(
            specification=float(raw["specification"]),
            generation=float(raw["generation"]),
            validation=float(raw["validation"]),
            integration=float(raw["integration"]),
            total=int(raw["total"]),
        )


def _breakdown(spec: float, gen: float, val: float, integ: float) -> EffortBreakdown:
    return EffortBreakdown(
        specification=spec,
        generation=gen,
        validation=val,
        integration=integ,
        total=round_half_up(spec + gen + val + integ),
    )


@dataclass
class BacklogItem:
    """Plan-side view of one piece of work."""

    item_id: str
    title: str
    task_type_id: str
    tier: Optional[AutonomyTier]
    baseline_points: float
    owner: Optional[str] = None
    status: str = "planned"
    estimate: Optional[EffortBreakdown] = None

    def to_payload(self) -> dict:
        return {
            "item_id": self.item_id,
            "title": self.title,
            "task_type_id": self.task_type_id,
            "tier": self.tier.wire if self.tier else None,
            "baseline_points": self.baseline_points,
            "owner": self.owner,
            "status": self.status,
            "estimate": self.estimate.to_payload() if self.estimate else None,
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "BacklogItem":
        tier = raw.get("tier")
        estimate = raw.get("estimate")
        return cls(
            item_id=str(raw["item_id"]),
            title=str(raw.get("title", raw["item_id"])),
            task_type_id=str(raw.get("task_type_id", "")),
            tier=AutonomyTier.parse(tier) if tier else None,
            baseline_points=float(raw["baseline_points"]),
            owner=raw.get("owner"),
            status=str(raw.get("status", "planned")),
            estimate=EffortBreakdown.from_payload(estimate) if estimate else None,
        )


def estimate(
    item: BacklogItem,
    model: EffortModelParams = EffortModelParams(),
    sampling_rate: Optional[float] = None,
) -> EffortBreakdown:
    """Tier-aware effort estimate from the item's human baseline.

    Tier 1 and AI-restricted cost the full baseline as human execution
    (validation is inherent in the human workflow, so none is listed).
    Tier 2 trades generation for specification plus full review. Tier 3
    costs monitoring plus sampled validation plus an exception reserve;
    ``sampling_rate`` must be supplied there (the caller knows the plan).
    Tier 4 is boundary definition, audit, and exception handling.
    """
    if item.tier is None:
        raise PlanningError(f"item {item.item_id} is unclassified; classify before estimating")
    baseline = item.baseline_points
    if not baseline or baseline <= 0:
        raise PlanningError(f"item {item.item_id} needs a positive human-baseline estimate")

    tier = item.tier
    if tier in (AutonomyTier.AI_RESTRICTED, AutonomyTier.TIER1, AutonomyTier.TIER1_PILOT):
        return _breakdown(0.0, baseline, 0.0, 0.0)
    if tier is AutonomyTier.TIER2:
        return _breakdown(
            baseline * model.tier2_specification_pct,
            baseline * model.tier2_generation_pct,
            baseline * model.tier2_validation_pct,
            0.0,
        )
    if tier is AutonomyTier.TIER3:
        if sampling_rate is None:
            raise PlanningError("tier3 estimates need the task type's sampling rate")
        if not 0.0 <= sampling_rate <= 1.0:
            raise PlanningError("sampling_rate must be in [0, 1]")
        return _breakdown(
            0.0,
            0.0,
            baseline * model.tier3_monitoring_pct
            + sampling_rate * baseline * model.tier3_item_validation_pct,
            baseline * model.tier3_exception_reserve_pct,
        )
    if tier is AutonomyTier.TIER4:
        return _breakdown(
            baseline * model.tier4_boundary_pct,
            0.0,
            baseline * model.tier4_audit_pct,
            baseline * model.tier4_exception_pct,
        )
    raise PlanningError(f"no estimation rule for tier {tier.wire}")  # pragma: no cover


# --------------------------------------------------------------------------
# Sprint plans and validation budgeting


@dataclass
class SprintPlan:
    sprint_id: str
    cycle: int
    items: list[BacklogItem] = field(default_factory=list)
    team_validation_capacity: Optional[float] = None

    def to_payload(self) -> dict:
        return {
            "schema_version": 1,
            "sprint_id": self.sprint_id,
            "cycle": self.cycle,
            "team_validation_capacity": self.team_validation_capacity,
            "items": [item.to_payload() for item in self.items],
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "SprintPlan":
        version = raw.get("schema_version", 1)
        if version != 1:
            raise PlanningError(f"unsupported plan schema_version {version!r}")
        capacity = raw.get("team_validation_capacity")
        return cls(
            sprint_id=str(raw["sprint_id"]),
            cycle=int(raw.get("cycle", 0)),
            items=[BacklogItem.from_payload(i) for i in raw.get("items", [])],
            team_validation_capacity=float(capacity) if capacity is not None else None,
        )


@dataclass(frozen=True)
class AdjustmentHint:
    item_id: str
    validation_points: float
    action: str
    detail: str

    def to_payload(self) -> dict:
        return {
            "item_id": self.item_id,
            "validation_points": self.validation_points,
            "action": self.action,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class BudgetReport:
    sprint_id: str
    required_validation: float
    available_capacity: float
    feasible: bool
    hints: tuple[AdjustmentHint, ...]

    def to_payload(self) -> dict:
        return {
            "sprint_id": self.sprint_id,
            "required_validation": self.required_validation,
            "available_capacity": self.available_capacity,
            "feasible": self.feasible,
            "hints": [h.to_payload() for h in self.hints],
        }


def budget_validation(plan: SprintPlan) -> BudgetReport:
    """Compare the plan's validation load against named human capacity.

    Infeasible plans get hints that shrink scope or lower delegation
    (humans execute more). Hints never touch validation percentages:
    validation is the control surface, not the slack.
    """
    if plan.team_validation_capacity is None:
        raise PlanningError("plan has no team_validation_capacity")
    missing = [i.item_id for i in plan.items if i.tier is not None and i.estimate is None]
    if missing:
        raise PlanningError(f"items lack estimates: {', '.join(sorted(missing))}")
    unclassified = [i.item_id for i in plan.items if i.tier is None]
    if unclassified:
        raise PlanningError(f"items are unclassified: {', '.join(sorted(unclassified))}")

    required = sum(i.estimate.validation for i in plan.items if i.estimate)
    available = plan.team_validation_capacity
    feasible = required <= available

    hints: list[AdjustmentHint] = []
    if not feasible:
        shortfall = required - available
        heavy = sorted(
            (i for i in plan.items if i.estimate and i.estimate.validation > 0),
            key=lambda i: i.estimate.validation,  # type: ignore[union-attr]
            reverse=True,
        )
        for item in heavy:
            validation = item.estimate.validation  # type: ignore[union-attr]
            hints.append(
                AdjustmentHint(
                    item.item_id,
                    validation,
                    "defer",
                    f"defer {item.item_id} to a later cycle; frees "
                    f"{validation:g} validation points toward the {shortfall:g} shortfall",
                )
            )
            hints.append(
                AdjustmentHint(
                    item.item_id,
                    validation,
                    "lower_delegation",
                    f"execute {item.item_id} at tier 1 (human does the work); "
                    "explicit validation effort returns to the human baseline",
                )
            )
    return BudgetReport(
        sprint_id=plan.sprint_id,
        required_validation=round(required, 6),
        available_capacity=available,
        feasible=feasible,
        hints=tuple(hints),
    )


# --------------------------------------------------------------------------
# Definition of done


DOD_CONDITIONS = (
    "validated_per_tier",
    "provenance_recorded",
    "owner_confirmed",
    "integration_verified",
    "deficiencies_resolved_or_accepted",
)


@dataclass(frozen=True)
class DoDReport:
    item_id: str
    conditions: dict
    missing: tuple[str, ...]
    accepted_risk_note: Optional[str]

    @property
    def done(self) -> bool:
        return not self.missing

    def to_payload(self) -> dict:
        return {
            "item_id": self.item_id,
            "conditions": dict(self.conditions),
            "missing": list(self.missing),
            "done": self.done,
            "accepted_risk_note": self.accepted_risk_note,
        }


def dod_check(
    item_id: str,
    snapshot: "RegistrySnapshot",
    templates: Optional[dict[str, ChecklistTemplate]] = None,
) -> DoDReport:
    """Evaluate the five done conditions for one item; strictly conjunctive.

    Tier-appropriate validation: tier 1 and AI-restricted work is validated
    by the human workflow itself; tier 2 needs a recorded review whose
    checklist fully covers the domain template; tiers 3 and 4 are covered
    by the task type's sampling plan, so the item-level condition holds
    once the type has one (it always does).
    """
    from .checklists import BUNDLED_TEMPLATES

    templates = templates if templates is not None else BUNDLED_TEMPLATES
    item = snapshot.items.get(item_id)
    if item is None:
        raise PlanningError(f"unknown item {item_id!r}")

    outcomes = [r.outcome for r in snapshot.outcomes if r.outcome.item_id == item_id]

    if item.tier is None:
        validated = False
    elif item.tier.number <= 1:
        validated = True
    elif item.tier is AutonomyTier.TIER2:
        domain = None
        if item.task_type_id and item.task_type_id in snapshot.task_types:
            domain = snapshot.task_types[item.task_type_id].domain
        template = templates.get(domain) if domain else None
        validated = any(
            checklist_coverage_ok(template, o.checklist_results) for o in outcomes
        )
    else:
        task_type = snapshot.task_types.get(item.task_type_id) if item.task_type_id else None
        validated = task_type is not None and task_type.sampling is not None

    provenance_ok = True
    if item.tier is not None and item.tier.number >= 2:
        provenance_ok = item.provenance is not None

    owner_ok = bool(item.owner)
    integration_ok = item.integration_verified

    open_deficiencies = any(
        o.worst_severity is not None and o.worst_severity >= Severity.MAJOR
        for o in outcomes
    )
    resolution = item.deficiency_resolution
    deficiencies_ok = (not open_deficiencies) or resolution is not None
    accepted_note = None
    if resolution and resolution.get("resolution") == "accepted_risk":
        accepted_note = resolution.get("note")

    conditions = {
        "validated_per_tier": validated,
        "provenance_recorded": provenance_ok,
        "owner_confirmed": owner_ok,
        "integration_verified": integration_ok,
        "deficiencies_resolved_or_accepted": deficiencies_ok,
    }
    missing = tuple(name for name in DOD_CONDITIONS if not conditions[name])
    return DoDReport(
        item_id=item_id,
        conditions=conditions,
        missing=missing,
        accepted_risk_note=accepted_note,
    )


# --------------------------------------------------------------------------
# Scaling profiles


@dataclass(frozen=True)
class ScalingProfile:
    band: str
    team_size_range: str
    hybrid_work_ownership: str
    validation: str
    integration_dod: str
    registry: str
    skill_maintenance: str

    def to_payload(self) -> dict:
        return {
            "band": self.band,
            "team_size_range": self.team_size_range,
            "hybrid_work_ownership": self.hybrid_work_ownership,
            "validation": self.validation,
            "integration_dod": self.integration_dod,
            "registry": self.registry,
            "skill_maintenance": self.skill_maintenance,
        }


_SOLO = ScalingProfile(
    band="solo_pair",
    team_size_range="1-2",
    hybrid_work_ownership="Practitioner",
    validation="Self-review + checklist",
    integration_dod="Personal DoD",
    registry="Personal log",
    skill_maintenance="Self-scheduled blocks",
)

_SMALL_TEAM = ScalingProfile(
    band="small_team",
    team_size_range="3-7",
    hybrid_work_ownership="SM or Tech Lead",
    validation="Peer review rotation",
    integration_dod="Team DoD",
    registry="Board metadata/tags",
    skill_maintenance="Team rotation cycles",
)

_DEPT = ScalingProfile(
    band="department_pmo",
    team_size_range="8+",
    hybrid_work_ownership="Dedicated role",
    validation="Validation Lead",
    integration_dod="Integration Steward",
    registry="Formal registry",
    skill_maintenance="Programmatic plan",
)


def scaling_profile(team_size: int) -> ScalingProfile:
    """Who carries each governance function at this team size."""
    if team_size < 1:
        raise PlanningError("team_size must be >= 1")
    if team_size <= 2:
        return _SOLO
    if team_size <= 7:
        return _SMALL_TEAM
    return _DEPT
