"""Validation outcomes, sampling plans, erosion checks, audits, and lint.

Everything here is pure: functions take folded registry state (or plain
values) and return reports. Writing results back into the log is the
engine's job.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

from .checklists import ChecklistTemplate
from .tiers import AutonomyTier, CapabilityRating, GovernanceError
from .transitions import CycleSummary, TransitionPolicy

if TYPE_CHECKING:  # pragma: no cover
    from .planning import SprintPlan
    from .registry import RegistrySnapshot


class QualityError(GovernanceError):
    pass


class Severity(enum.IntEnum):
    MINOR = 1
    MAJOR = 2
    CRITICAL = 3

    @property
    def wire(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value) -> "Severity":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            for member in cls:
                if member.name.lower() == value.strip().lower():
                    return member
        raise ValueError(f"not a severity: {value!r}")


class DetectionPoint(enum.Enum):
    REVIEW = "review"
    SAMPLING = "sampling"
    INTEGRATION = "integration"
    POST_DELIVERY = "post_delivery"

    @property
    def wire(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value) -> "DetectionPoint":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            for member in cls:
                if member.value == value.strip().lower():
                    return member
        raise ValueError(f"not a detection point: {value!r}")


# Sampling and integration findings only make sense where review is not
# already total; tiers 1 and 2 review everything.
SAMPLED_DETECTION_TIERS = frozenset({AutonomyTier.TIER3, AutonomyTier.TIER4})


@dataclass(frozen=True)
class Finding:
    severity: Severity
    category: str
    note: str = ""

    def to_payload(self) -> dict:
        return {"severity": self.severity.wire, "category": self.category, "note": self.note}

    @classmethod
    def from_payload(cls, raw: dict) -> "Finding":
        return cls(Severity.parse(raw["severity"]), str(raw["category"]), str(raw.get("note", "")))


@dataclass(frozen=True)
class ValidationOutcome:
    """One reviewed output of one backlog item."""

    item_id: str
    reviewer: str
    cycle: int
    detected_in: DetectionPoint
    first_pass_accept: bool
    findings: tuple[Finding, ...] = ()
    checklist_results: dict = field(default_factory=dict)
    review_minutes: Optional[float] = None

    def validate(self, item_tier: Optional[AutonomyTier] = None) -> None:
        if not self.reviewer:
            raise QualityError("reviewer is required")
        if self.cycle < 0:
            raise QualityError("cycle must be >= 0")
        if self.review_minutes is not None and self.review_minutes < 0:
            raise QualityError("review_minutes must be >= 0")
        if self.first_pass_accept and any(f.severity >= Severity.MAJOR for f in self.findings):
            raise QualityError("first-pass acceptance contradicts a major or critical finding")
        for key, value in self.checklist_results.items():
            if value not in ("pass", "fail", "n/a"):
                raise QualityError(f"checklist result for {key} must be pass, fail, or n/a")
        if (
            item_tier is not None
            and self.detected_in in (DetectionPoint.SAMPLING, DetectionPoint.INTEGRATION)
            and item_tier not in SAMPLED_DETECTION_TIERS
        ):
            raise QualityError(
                f"detected_in={self.detected_in.wire} is only valid for tier3/tier4 items"
            )

    @property
    def worst_severity(self) -> Optional[Severity]:
        return max((f.severity for f in self.findings), default=None)

    def to_payload(self) -> dict:
        return {
            "item_id": self.item_id,
            "reviewer": self.reviewer,
            "cycle": self.cycle,
            "detected_in": self.detected_in.wire,
            "first_pass_accept": self.first_pass_accept,
            "findings": [f.to_payload() for f in self.findings],
            "checklist_results": dict(self.checklist_results),
            "review_minutes": self.review_minutes,
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "ValidationOutcome":
        return cls(
            item_id=str(raw["item_id"]),
            reviewer=str(raw["reviewer"]),
            cycle=int(raw["cycle"]),
            detected_in=DetectionPoint.parse(raw["detected_in"]),
            first_pass_accept=bool(raw["first_pass_accept"]),
            findings=tuple(Finding.from_payload(f) for f in raw.get("findings", [])),
            checklist_results=dict(raw.get("checklist_results", {})),
            review_minutes=raw.get("review_minutes"),
        )


@dataclass(frozen=True)
class OutcomeRecord:
    """A validation outcome joined with its item's context, as folded state."""

    event_id: int
    task_type_id: str
    item_tier: Optional[AutonomyTier]
    outcome: ValidationOutcome


# --------------------------------------------------------------------------
# Sampling


class SamplingBasis(enum.Enum):
    INITIAL = "initial"
    ADJUSTMENT = "adjustment"
    SQC_METHOD = "sqc_method"

    @property
    def wire(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value) -> "SamplingBasis":
        for member in cls:
            if member.value == value or member is value:
                return member
        raise ValueError(f"not a sampling basis: {value!r}")


@dataclass(frozen=True)
class SamplingDefaults:
    """Sampling knobs. The step sizes are starting points for calibration."""

    initial_rate: float = 0.20
    step: float = 0.10
    clean_cycles_to_lower: int = 3
    minimum_rate: float = 0.10

    def validate(self) -> None:
        for name, value in (
            ("initial_rate", self.initial_rate),
            ("step", self.step),
            ("minimum_rate", self.minimum_rate),
        ):
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")
        if self.clean_cycles_to_lower < 1:
            raise ValueError("clean_cycles_to_lower must be >= 1")
        if self.minimum_rate > self.initial_rate:
            raise ValueError("minimum_rate cannot exceed initial_rate")


@dataclass(frozen=True)
class SamplingAdjustment:
    cycle: int
    old_rate: float
    new_rate: float
    basis: SamplingBasis
    reason: str = ""

    def to_payload(self) -> dict:
        return {
            "cycle": self.cycle,
            "old_rate": self.old_rate,
            "new_rate": self.new_rate,
            "basis": self.basis.wire,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class SamplingPlan:
    """Current sampling rate for a tier-3 task type, with its full history."""

    task_type_id: str
    rate: float
    basis: SamplingBasis = SamplingBasis.INITIAL
    history: tuple[SamplingAdjustment, ...] = ()

    @classmethod
    def initial(cls, task_type_id: str, defaults: SamplingDefaults) -> "SamplingPlan":
        return cls(task_type_id=task_type_id, rate=defaults.initial_rate)

    def with_adjustment(self, adjustment: SamplingAdjustment) -> "SamplingPlan":
        return replace(
            self,
            rate=adjustment.new_rate,
            basis=adjustment.basis,
            history=self.history + (adjustment,),
        )


def adjust_sampling(
    plan: SamplingPlan,
    recent_cycles: Sequence[CycleSummary],
    escape_count: int,
    defaults: SamplingDefaults,
    policy: TransitionPolicy,
    cycle: int,
) -> SamplingPlan:
    """Move the sampling rate one step, or not at all.

    An escaped defect (found at integration or later) raises the rate one
    step, capped at 1.0. A full run of consecutive clean cycles lowers it
    one step, floored at the configured minimum. Everything else leaves
    the plan untouched; the returned plan carries the adjustment history.
    """
    if escape_count < 0:
        raise QualityError("escape_count must be >= 0")
    if escape_count > 0:
        new_rate = round(min(1.0, plan.rate + defaults.step), 6)
        reason = f"{escape_count} escaped defect(s) reached integration or later"
    else:
        window = list(recent_cycles)[-defaults.clean_cycles_to_lower :]
        if (
            len(window) == defaults.clean_cycles_to_lower
            and all(c.is_clean(policy) for c in window)
        ):
            new_rate = round(max(defaults.minimum_rate, plan.rate - defaults.step), 6)
            reason = f"{defaults.clean_cycles_to_lower} consecutive clean cycles"
        else:
            return plan
    if new_rate == plan.rate:
        return plan
    return plan.with_adjustment(
        SamplingAdjustment(cycle, plan.rate, new_rate, SamplingBasis.ADJUSTMENT, reason)
    )


def set_sqc_rate(plan: SamplingPlan, rate: float, cycle: int, method_note: str) -> SamplingPlan:
    """Record a rate computed by an external statistical QC method.

    The engine stores the rate and the note; it does not recompute or
    second-guess the method.
    """
    if not 0.0 < rate <= 1.0:
        raise QualityError("sqc rate must be in (0, 1]")
    if not method_note:
        raise QualityError("sqc adjustments must name their method")
    return plan.with_adjustment(
        SamplingAdjustment(cycle, plan.rate, round(rate, 6), SamplingBasis.SQC_METHOD, method_note)
    )


# --------------------------------------------------------------------------
# Cycle metrics


@dataclass(frozen=True)
class CycleMetrics:
    """Per-task-type, per-cycle review telemetry."""

    task_type_id: str
    cycle: int
    outcomes_count: int
    first_pass_rate: Optional[float]
    error_rate: Optional[float]
    critical_count: int
    mean_review_minutes: Optional[float]
    detected_in_counts: dict

    @property
    def empty(self) -> bool:
        return self.outcomes_count == 0

    def to_payload(self) -> dict:
        return {
            "task_type_id": self.task_type_id,
            "cycle": self.cycle,
            "outcomes_count": self.outcomes_count,
            "first_pass_rate": self.first_pass_rate,
            "error_rate": self.error_rate,
            "critical_count": self.critical_count,
            "mean_review_minutes": self.mean_review_minutes,
            "detected_in_counts": dict(self.detected_in_counts),
            "empty": self.empty,
        }


def compute_cycle_metrics(
    task_type_id: str, cycle: int, outcomes: Iterable[OutcomeRecord]
) -> CycleMetrics:
    rows = [
        r.outcome
        for r in outcomes
        if r.task_type_id == task_type_id and r.outcome.cycle == cycle
    ]
    count = len(rows)
    if count == 0:
        return CycleMetrics(task_type_id, cycle, 0, None, None, 0, None, {})
    first_pass = sum(1 for o in rows if o.first_pass_accept)
    flagged = sum(
        1 for o in rows if o.worst_severity is not None and o.worst_severity >= Severity.MAJOR
    )
    criticals = sum(1 for o in rows if o.worst_severity is Severity.CRITICAL)
    minutes = [o.review_minutes for o in rows if o.review_minutes is not None]
    by_point: dict[str, int] = {}
    for o in rows:
        by_point[o.detected_in.wire] = by_point.get(o.detected_in.wire, 0) + 1
    return CycleMetrics(
        task_type_id=task_type_id,
        cycle=cycle,
        outcomes_count=count,
        first_pass_rate=first_pass / count,
        error_rate=flagged / count,
        critical_count=criticals,
        mean_review_minutes=(sum(minutes) / len(minutes)) if minutes else None,
        detected_in_counts=by_point,
    )


# --------------------------------------------------------------------------
# Competence erosion


@dataclass(frozen=True)
class ErosionStatus:
    task_type_id: str
    tier: AutonomyTier
    baseline_cycle: int
    cycles_since_human_only: int
    flagged: bool
    suggested_item: Optional[dict] = None

    def to_payload(self) -> dict:
        return {
            "task_type_id": self.task_type_id,
            "tier": self.tier.wire,
            "baseline_cycle": self.baseline_cycle,
            "cycles_since_human_only": self.cycles_since_human_only,
            "flagged": self.flagged,
            "suggested_item": self.suggested_item,
        }


def erosion_check(snapshot: "RegistrySnapshot", threshold: int = 6) -> list[ErosionStatus]:
    """Flag delegated task types whose humans have not practiced recently.

    The baseline is the last recorded human-only cycle, or the
    registration cycle when there has never been one. Only tiers 2 and up
    are candidates: below that, humans still do the work.
    """
    if threshold < 1:
        raise QualityError("erosion threshold must be >= 1")
    statuses = []
    for task_type in snapshot.task_types.values():
        tier = task_type.current_tier
        if tier is None or tier.number < 2:
            continue
        baseline = (
            task_type.last_human_only_cycle
            if task_type.last_human_only_cycle is not None
            else task_type.registered_cycle
        )
        since = max(0, snapshot.current_cycle - baseline)
        flagged = since >= threshold
        suggestion = None
        if flagged:
            suggestion = {
                "title": f"Human-only cycle: {task_type.name}",
                "task_type_id": task_type.task_type_id,
                "applied_tier": AutonomyTier.AI_RESTRICTED.wire,
                "rationale": (
                    f"{since} cycles since humans last executed this work; "
                    "scheduled to keep validation skills current"
                ),
            }
        statuses.append(
            ErosionStatus(
                task_type_id=task_type.task_type_id,
                tier=tier,
                baseline_cycle=baseline,
                cycles_since_human_only=since,
                flagged=flagged,
                suggested_item=suggestion,
            )
        )
    statuses.sort(key=lambda s: s.task_type_id)
    return statuses


# --------------------------------------------------------------------------
# Error injection audits


@dataclass(frozen=True)
class PlantedError:
    plant_id: str
    item_id: str
    description: str
    severity: Severity
    cycle: int


@dataclass(frozen=True)
class InjectionCampaign:
    campaign_id: str
    plants: tuple[PlantedError, ...]
    opened_cycle: int
    closed: bool = False
    closed_cycle: Optional[int] = None
    detected_plant_ids: frozenset = frozenset()


@dataclass(frozen=True)
class InjectionAuditReport:
    campaign_id: str
    planted_count: int
    detected_count: int
    detection_rate: float
    detected_plant_ids: tuple[str, ...]
    missed_plant_ids: tuple[str, ...]

    def to_payload(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "planted_count": self.planted_count,
            "detected_count": self.detected_count,
            "detection_rate": self.detection_rate,
            "detected_plant_ids": list(self.detected_plant_ids),
            "missed_plant_ids": list(self.missed_plant_ids),
        }


def run_injection_audit(
    campaign: InjectionCampaign, outcomes: Iterable[OutcomeRecord]
) -> InjectionAuditReport:
    """Score a closed campaign: which planted errors did review catch?

    A plant counts as detected when its item has a recorded finding at or
    above the planted severity, no earlier than the planting cycle. Open
    campaigns cannot be audited; their plants stay hidden from reviewers.
    """
    if not campaign.closed:
        raise QualityError(f"campaign {campaign.campaign_id} is still open")
    if not campaign.plants:
        raise QualityError(f"campaign {campaign.campaign_id} has no planted errors")
    by_item: dict[str, list[OutcomeRecord]] = {}
    for record in outcomes:
        by_item.setdefault(record.outcome.item_id, []).append(record)
    detected = []
    missed = []
    for plant in campaign.plants:
        hits = [
            r
            for r in by_item.get(plant.item_id, [])
            if r.outcome.cycle >= plant.cycle
            and any(f.severity >= plant.severity for f in r.outcome.findings)
        ]
        (detected if hits else missed).append(plant.plant_id)
    return InjectionAuditReport(
        campaign_id=campaign.campaign_id,
        planted_count=len(campaign.plants),
        detected_count=len(detected),
        detection_rate=len(detected) / len(campaign.plants),
        detected_plant_ids=tuple(detected),
        missed_plant_ids=tuple(missed),
    )


# --------------------------------------------------------------------------
# Anti-pattern lint


LINT_RULES = (
    "too_many_high_tier_starts",
    "validation_not_budgeted",
    "performative_ownership",
    "unclassified_item",
    "erosion_ignored",
    "registry_violation_pattern",
)


@dataclass(frozen=True)
class LintConfig:
    """Windows and limits for lint heuristics; all calibration-grade."""

    violation_window_cycles: int = 3
    violation_repeat_limit: int = 2
    erosion_threshold: int = 6
    erosion_grace_cycles: int = 1


@dataclass(frozen=True)
class LintFinding:
    rule: str
    subject: str
    detail: str

    def to_payload(self) -> dict:
        return {"rule": self.rule, "subject": self.subject, "detail": self.detail}


def lint(
    snapshot: "RegistrySnapshot",
    plan: "Optional[SprintPlan]" = None,
    config: LintConfig = LintConfig(),
) -> list[LintFinding]:
    """Run all six anti-pattern rules; returns findings, empty when healthy."""
    findings: list[LintFinding] = []
    findings += _lint_high_tier_starts(snapshot)
    findings += _lint_validation_budget(plan)
    findings += _lint_performative_ownership(snapshot)
    findings += _lint_unclassified_items(snapshot, plan)
    findings += _lint_erosion_ignored(snapshot, config)
    findings += _lint_violation_pattern(snapshot, config)
    findings.sort(key=lambda f: (LINT_RULES.index(f.rule), f.subject))
    return findings


def _lint_high_tier_starts(snapshot) -> list[LintFinding]:
    # Tier 3+ delegation on a capability nobody has demonstrated is the
    # classic over-trust failure; the claimed rating at classification is
    # the auditable artifact.
    out = []
    for item in snapshot.items.values():
        if item.tier is None or item.tier.number < 3 or item.claimed_capability is None:
            continue
        if item.claimed_capability < CapabilityRating.ESTABLISHED:
            out.append(
                LintFinding(
                    "too_many_high_tier_starts",
                    item.item_id,
                    f"classified at {item.tier.wire} with capability rated "
                    f"{item.claimed_capability.wire}; tier 3+ needs an established track record",
                )
            )
    return out


def _lint_validation_budget(plan) -> list[LintFinding]:
    if plan is None:
        return []
    out = []
    supervised = [
        item for item in plan.items if item.tier is not None and item.tier.number >= 2
    ]
    if supervised and plan.team_validation_capacity is None:
        out.append(
            LintFinding(
                "validation_not_budgeted",
                plan.sprint_id,
                "plan contains supervised items but no team validation capacity",
            )
        )
    for item in supervised:
        if item.estimate is None or item.estimate.validation <= 0:
            out.append(
                LintFinding(
                    "validation_not_budgeted",
                    item.item_id,
                    f"{item.tier.wire} item planned with no explicit validation effort",
                )
            )
    return out


def _lint_performative_ownership(snapshot) -> list[LintFinding]:
    # An owner whose supervised items produce reviewed outputs across two
    # or more cycles without the owner ever appearing as a reviewer.
    by_owner: dict[str, list] = {}
    for item in snapshot.items.values():
        if item.owner and item.tier is not None and item.tier.number >= 2:
            by_owner.setdefault(item.owner, []).append(item)
    out = []
    for owner, items in sorted(by_owner.items()):
        item_ids = {i.item_id for i in items}
        relevant = [
            r for r in snapshot.outcomes if r.outcome.item_id in item_ids
        ]
        cycles = {r.outcome.cycle for r in relevant}
        if len(cycles) < 2:
            continue
        if not any(r.outcome.reviewer == owner for r in relevant):
            out.append(
                LintFinding(
                    "performative_ownership",
                    owner,
                    f"owns {len(items)} supervised item(s) with outcomes across "
                    f"{len(cycles)} cycles but has never reviewed any of them",
                )
            )
    return out


def _lint_unclassified_items(snapshot, plan) -> list[LintFinding]:
    out = []
    for item in snapshot.items.values():
        if item.tier is None and item.status in ("in_progress", "validating", "done"):
            out.append(
                LintFinding(
                    "unclassified_item",
                    item.item_id,
                    f"item is {item.status} without a recorded classification",
                )
            )
    if plan is not None:
        for item in plan.items:
            if item.tier is None:
                out.append(
                    LintFinding(
                        "unclassified_item",
                        item.item_id,
                        "planned item has no autonomy tier",
                    )
                )
    return out


def _lint_erosion_ignored(snapshot, config: LintConfig) -> list[LintFinding]:
    out = []
    for status in erosion_check(snapshot, threshold=config.erosion_threshold):
        if not status.flagged:
            continue
        over = status.cycles_since_human_only - config.erosion_threshold
        if over < config.erosion_grace_cycles:
            continue
        scheduled = any(
            item.task_type_id == status.task_type_id
            and item.tier is AutonomyTier.AI_RESTRICTED
            and item.status != "done"
            for item in snapshot.items.values()
        )
        if not scheduled:
            out.append(
                LintFinding(
                    "erosion_ignored",
                    status.task_type_id,
                    f"flagged for {over + 1} cycle(s) beyond the erosion threshold "
                    "with no human-only item scheduled",
                )
            )
    return out


def _lint_violation_pattern(snapshot, config: LintConfig) -> list[LintFinding]:
    window_start = snapshot.current_cycle - config.violation_window_cycles + 1
    recent = [v for v in snapshot.violations if v.get("cycle", 0) >= window_start]
    out = []
    for key_field in ("person", "task_type_id"):
        counts: dict[str, int] = {}
        for violation in recent:
            value = violation.get(key_field)
            if value:
                counts[value] = counts.get(value, 0) + 1
        for subject, count in sorted(counts.items()):
            if count >= config.violation_repeat_limit:
                out.append(
                    LintFinding(
                        "registry_violation_pattern",
                        subject,
                        f"{count} registry violations within the last "
                        f"{config.violation_window_cycles} cycles",
                    )
                )
    return out


def checklist_coverage_ok(
    template: Optional[ChecklistTemplate], checklist_results: dict
) -> bool:
    """True when a results map fully covers the domain's template."""
    if template is None:
        return bool(checklist_results)
    return not template.coverage_gaps(checklist_results)
