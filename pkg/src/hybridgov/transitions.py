"""Tier transitions: slow evidence-based promotion, immediate demotion.

The asymmetry is the point. Promotion requires a full window of
consecutive clean cycles at the current tier plus confirmed validation
capacity, moves exactly one tier, and can always be vetoed by simply not
building the event. Demotion takes effect the moment it is constructed:
there is no approval field anywhere in the data model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .tiers import AutonomyTier, CapabilityRating, GovernanceError


class TransitionError(GovernanceError):
    """Raised when a transition would violate policy."""


class PromotionBlocked(TransitionError):
    def __init__(self, blockers: Sequence[str]):
        super().__init__("promotion blocked: " + "; ".join(blockers))
        self.blockers = list(blockers)


@dataclass(frozen=True)
class RatingThresholds:
    """Evidence needed before a capability rating may be derived upward.

    Counts are clean cycles; "clean" means the cycle had validated outputs,
    an error rate strictly below the tier threshold, and no criticals.
    """

    emerging_clean_cycles: int = 3
    established_total: int = 8
    established_at_tier2: int = 5
    mature_total: int = 16
    mature_at_tier3: int = 8

    def validate(self) -> None:
        values = (
            self.emerging_clean_cycles,
            self.established_total,
            self.established_at_tier2,
            self.mature_total,
            self.mature_at_tier3,
        )
        if any(v < 1 for v in values):
            raise ValueError("rating thresholds must be >= 1")
        if not (self.emerging_clean_cycles <= self.established_total <= self.mature_total):
            raise ValueError("rating totals must be non-decreasing across ratings")


@dataclass(frozen=True)
class TransitionPolicy:
    """Team-tunable knobs of the transition state machine.

    min_cycles_for_promotion is keyed by (from_tier_number, to_tier_number);
    error_rate_thresholds by tier number 1..4. Defaults are starting points
    meant for calibration, not laws of nature.
    """

    min_cycles_for_promotion: dict[tuple[int, int], int] = field(
        default_factory=lambda: {(1, 2): 3, (2, 3): 5, (3, 4): 8}
    )
    error_rate_thresholds: dict[int, float] = field(
        default_factory=lambda: {1: 0.20, 2: 0.10, 3: 0.05, 4: 0.02}
    )
    consecutive_breach_limit: int = 2
    critical_error_demotion_depth: int = 1
    rating_thresholds: RatingThresholds = field(default_factory=RatingThresholds)

    def validate(self) -> None:
        for key, cycles in self.min_cycles_for_promotion.items():
            if key not in ((1, 2), (2, 3), (3, 4)):
                raise ValueError(f"unsupported promotion step: {key}")
            if cycles < 1:
                raise ValueError(f"min cycles for {key} must be >= 1")
        if set(self.min_cycles_for_promotion) != {(1, 2), (2, 3), (3, 4)}:
            raise ValueError("promotion steps 1->2, 2->3, 3->4 must all be present")
        if set(self.error_rate_thresholds) != {1, 2, 3, 4}:
            raise ValueError("error rate thresholds must cover tiers 1..4")
        for tier_number, threshold in self.error_rate_thresholds.items():
            if not 0.0 < threshold <= 1.0:
                raise ValueError(f"threshold for tier {tier_number} must be in (0, 1]")
        if self.consecutive_breach_limit < 1:
            raise ValueError("consecutive_breach_limit must be >= 1")
        if self.critical_error_demotion_depth < 1:
            raise ValueError("critical_error_demotion_depth must be >= 1")
        self.rating_thresholds.validate()

    @classmethod
    def default(cls) -> "TransitionPolicy":
        policy = cls()
        policy.validate()
        return policy

    def min_cycles_to_promote(self, from_tier: AutonomyTier) -> int:
        step = (from_tier.number, from_tier.number + 1)
        if step not in self.min_cycles_for_promotion:
            raise TransitionError(f"no promotion step from {from_tier.wire}")
        return self.min_cycles_for_promotion[step]

    def threshold_for(self, tier: AutonomyTier) -> float:
        """Error-rate threshold for a tier; ai_restricted has no AI output to breach."""
        if tier is AutonomyTier.AI_RESTRICTED:
            return 1.0
        return self.error_rate_thresholds[tier.number]


@dataclass(frozen=True)
class CycleSummary:
    """Aggregated validation evidence for one task type in one cycle."""

    cycle_index: int
    tier_during_cycle: AutonomyTier
    outputs_validated: int
    outputs_with_major_or_critical: int
    critical_count: int
    sampled_fraction: Optional[float] = None

    def __post_init__(self) -> None:
        if self.cycle_index < 0:
            raise ValueError("cycle_index must be >= 0")
        if self.outputs_validated < 0 or self.outputs_with_major_or_critical < 0:
            raise ValueError("counts must be >= 0")
        if self.critical_count < 0:
            raise ValueError("critical_count must be >= 0")
        if self.outputs_with_major_or_critical > self.outputs_validated:
            raise ValueError("cannot have more flagged outputs than validated outputs")
        if self.sampled_fraction is not None and not 0.0 <= self.sampled_fraction <= 1.0:
            raise ValueError("sampled_fraction must be in [0, 1]")

    @property
    def error_rate(self) -> Optional[float]:
        """Share of validated outputs with major or critical findings; None without evidence."""
        if self.outputs_validated == 0:
            return None
        return self.outputs_with_major_or_critical / self.outputs_validated

    def is_clean(self, policy: TransitionPolicy) -> bool:
        rate = self.error_rate
        return (
            rate is not None
            and rate < policy.threshold_for(self.tier_during_cycle)
            and self.critical_count == 0
        )

    def is_breach(self, policy: TransitionPolicy) -> bool:
        rate = self.error_rate
        return rate is not None and rate > policy.threshold_for(self.tier_during_cycle)

    def to_payload(self) -> dict:
        return {
            "cycle_index": self.cycle_index,
            "tier_during_cycle": self.tier_during_cycle.wire,
            "outputs_validated": self.outputs_validated,
            "outputs_with_major_or_critical": self.outputs_with_major_or_critical,
            "critical_count": self.critical_count,
            "sampled_fraction": self.sampled_fraction,
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "CycleSummary":
        return cls(
            cycle_index=int(raw["cycle_index"]),
            tier_during_cycle=AutonomyTier.parse(raw["tier_during_cycle"]),
            outputs_validated=int(raw["outputs_validated"]),
            outputs_with_major_or_critical=int(raw["outputs_with_major_or_critical"]),
            critical_count=int(raw["critical_count"]),
            sampled_fraction=raw.get("sampled_fraction"),
        )


@dataclass
class EvidenceLedger:
    """Ordered per-cycle evidence for one task type."""

    task_type_id: str
    cycles: list[CycleSummary] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._check_order(self.cycles)

    @staticmethod
    def _check_order(cycles: Sequence[CycleSummary]) -> None:
        for earlier, later in zip(cycles, cycles[1:]):
            if later.cycle_index <= earlier.cycle_index:
                raise ValueError("cycle indexes must be strictly increasing")

    def append(self, summary: CycleSummary) -> None:
        if self.cycles and summary.cycle_index <= self.cycles[-1].cycle_index:
            raise ValueError(
                f"cycle {summary.cycle_index} not after {self.cycles[-1].cycle_index}"
            )
        self.cycles.append(summary)

    def trailing_at_tier(self, tier: AutonomyTier) -> list[CycleSummary]:
        """Longest run of most-recent cycles spent at the given tier number."""
        run: list[CycleSummary] = []
        for summary in reversed(self.cycles):
            if summary.tier_during_cycle.number != tier.number:
                break
            run.append(summary)
        run.reverse()
        return run

    def since_cycle(self, cycle_index: int) -> "EvidenceLedger":
        """Sub-ledger with cycles at or after cycle_index (rating reset points)."""
        return EvidenceLedger(
            self.task_type_id,
            [c for c in self.cycles if c.cycle_index >= cycle_index],
        )


class TransitionTrigger(enum.Enum):
    EVIDENCE_REVIEW = "evidence_review"
    CRITICAL_ERROR = "critical_error"
    CONSECUTIVE_BREACH = "consecutive_breach"
    CAPACITY_SHORTFALL = "capacity_shortfall"
    MEMBER_REQUEST = "member_request"

    @property
    def wire(self) -> str:
        return self.value


DEMOTION_TRIGGERS = frozenset(
    {
        TransitionTrigger.CRITICAL_ERROR,
        TransitionTrigger.CONSECUTIVE_BREACH,
        TransitionTrigger.CAPACITY_SHORTFALL,
        TransitionTrigger.MEMBER_REQUEST,
    }
)


@dataclass(frozen=True)
class TransitionEvent:
    """A completed tier change. Note the absence of any approval field:
    demotions are effective on construction, and promotions carry their
    eligibility evidence instead of a sign-off."""

    task_type_id: str
    direction: str  # "promotion" | "demotion"
    from_tier: AutonomyTier
    to_tier: AutonomyTier
    trigger: TransitionTrigger
    requested_by: str
    cycle: int
    evidence_window: tuple[CycleSummary, ...] = ()
    rationale: str = ""

    def __post_init__(self) -> None:
        if self.direction not in ("promotion", "demotion"):
            raise ValueError(f"bad direction: {self.direction}")
        if self.direction == "promotion" and self.to_tier.number != self.from_tier.number + 1:
            raise ValueError("promotions move exactly one tier")
        if self.direction == "demotion" and self.to_tier.number >= self.from_tier.number:
            raise ValueError("demotions must lower the tier")
        if not self.requested_by:
            raise ValueError("requested_by is required")

    def to_payload(self) -> dict:
        return {
            "task_type_id": self.task_type_id,
            "direction": self.direction,
            "from_tier": self.from_tier.wire,
            "to_tier": self.to_tier.wire,
            "trigger": self.trigger.wire,
            "cycle": self.cycle,
            "evidence_window": [c.to_payload() for c in self.evidence_window],
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class PromotionEligibility:
    task_type_id: str
    current_tier: AutonomyTier
    target_tier: Optional[AutonomyTier]
    eligible: bool
    blockers: tuple[str, ...]
    window: tuple[CycleSummary, ...]

    def to_payload(self) -> dict:
        return {
            "task_type_id": self.task_type_id,
            "current_tier": self.current_tier.wire,
            "target_tier": self.target_tier.wire if self.target_tier else None,
            "eligible": self.eligible,
            "blockers": list(self.blockers),
            "window": [c.to_payload() for c in self.window],
        }


def check_promotion(
    current_tier: AutonomyTier,
    ledger: EvidenceLedger,
    policy: TransitionPolicy,
    capacity_ok: bool,
) -> PromotionEligibility:
    """Evaluate single-step promotion eligibility; never mutates anything.

    Every cycle of the evaluation window (the last ``min_cycles`` at the
    current tier) must carry validated outputs, an error rate strictly
    below the tier threshold, and zero criticals. Validation capacity for
    the next tier must be confirmed by the caller.
    """
    blockers: list[str] = []
    window: tuple[CycleSummary, ...] = ()
    target: Optional[AutonomyTier] = None

    if current_tier is AutonomyTier.TIER4:
        blockers.append("already at the top tier")
    elif current_tier is AutonomyTier.AI_RESTRICTED:
        blockers.append("ai_restricted task types re-enter through classification, not promotion")
    else:
        target = current_tier.step_up()
        need = policy.min_cycles_to_promote(current_tier)
        trailing = ledger.trailing_at_tier(current_tier)
        if len(trailing) < need:
            blockers.append(
                f"only {len(trailing)} consecutive cycles at {current_tier.wire}, need {need}"
            )
            window = tuple(trailing)
        else:
            window = tuple(trailing[-need:])
            threshold = policy.threshold_for(current_tier)
            for summary in window:
                rate = summary.error_rate
                if rate is None:
                    blockers.append(f"cycle {summary.cycle_index} has no validated outputs")
                elif rate >= threshold:
                    blockers.append(
                        f"cycle {summary.cycle_index} error rate {rate:.3f} not below {threshold:.3f}"
                    )
                if summary.critical_count > 0:
                    blockers.append(f"cycle {summary.cycle_index} had a critical error")
        if not capacity_ok:
            blockers.append("validation capacity for the next tier is not confirmed")

    return PromotionEligibility(
        task_type_id=ledger.task_type_id,
        current_tier=current_tier,
        target_tier=target,
        eligible=not blockers,
        blockers=tuple(blockers),
        window=window,
    )


def build_promotion_event(
    current_tier: AutonomyTier,
    ledger: EvidenceLedger,
    policy: TransitionPolicy,
    capacity_ok: bool,
    requested_by: str,
    cycle: int,
    rationale: str = "",
) -> TransitionEvent:
    """Construct a promotion, or raise PromotionBlocked with every blocker."""
    eligibility = check_promotion(current_tier, ledger, policy, capacity_ok)
    if not eligibility.eligible:
        raise PromotionBlocked(eligibility.blockers)
    assert eligibility.target_tier is not None
    return TransitionEvent(
        task_type_id=ledger.task_type_id,
        direction="promotion",
        from_tier=current_tier,
        to_tier=eligibility.target_tier,
        trigger=TransitionTrigger.EVIDENCE_REVIEW,
        requested_by=requested_by,
        cycle=cycle,
        evidence_window=eligibility.window,
        rationale=rationale,
    )


def apply_demotion(
    task_type_id: str,
    current_tier: AutonomyTier,
    trigger: TransitionTrigger,
    requested_by: str,
    policy: TransitionPolicy,
    cycle: int,
    rationale: str = "",
    evidence: Iterable[CycleSummary] = (),
) -> TransitionEvent:
    """Construct an immediately-effective demotion event.

    Critical errors drop by the policy's configured depth (clamped at
    ai_restricted); every other trigger drops one tier. A member request
    needs no justification and no approval.
    """
    if trigger not in DEMOTION_TRIGGERS:
        raise TransitionError(f"{trigger.wire} is not a demotion trigger")
    if current_tier is AutonomyTier.AI_RESTRICTED:
        raise TransitionError("already ai_restricted; nothing to demote")
    depth = (
        policy.critical_error_demotion_depth
        if trigger is TransitionTrigger.CRITICAL_ERROR
        else 1
    )
    return TransitionEvent(
        task_type_id=task_type_id,
        direction="demotion",
        from_tier=current_tier,
        to_tier=current_tier.step_down(depth),
        trigger=trigger,
        requested_by=requested_by,
        cycle=cycle,
        evidence_window=tuple(evidence),
        rationale=rationale,
    )


def count_trailing_breaches(ledger: EvidenceLedger, policy: TransitionPolicy) -> int:
    """Consecutive breached cycles ending at the most recent cycle."""
    count = 0
    for summary in reversed(ledger.cycles):
        if summary.is_breach(policy):
            count += 1
        else:
            break
    return count


def derive_capability_rating(
    ledger: EvidenceLedger,
    policy: TransitionPolicy,
    floor: CapabilityRating = CapabilityRating.UNPROVEN,
) -> CapabilityRating:
    """Derive the rating a ledger justifies. Upward moves happen only here.

    Counting resets whenever trust is broken: any cycle with a critical,
    or a run of breached cycles reaching the policy's consecutive limit,
    wipes accumulated clean-cycle credit. ``floor`` lets a recorded manual
    downgrade cap nothing while still being reflected in snapshots: the
    derived value never goes below it, because the downgrade event also
    restarts the ledger slice the caller passes in.
    """
    clean_total = 0
    clean_at_tier2 = 0
    clean_at_tier3 = 0
    breach_streak = 0
    for summary in ledger.cycles:
        if summary.critical_count > 0:
            clean_total = clean_at_tier2 = clean_at_tier3 = 0
            breach_streak = 0
            continue
        if summary.is_breach(policy):
            breach_streak += 1
            if breach_streak >= policy.consecutive_breach_limit:
                clean_total = clean_at_tier2 = clean_at_tier3 = 0
            continue
        breach_streak = 0
        if summary.is_clean(policy):
            clean_total += 1
            if summary.tier_during_cycle.number >= 2:
                clean_at_tier2 += 1
            if summary.tier_during_cycle.number >= 3:
                clean_at_tier3 += 1

    thresholds = policy.rating_thresholds
    if clean_total >= thresholds.mature_total and clean_at_tier3 >= thresholds.mature_at_tier3:
        derived = CapabilityRating.MATURE
    elif (
        clean_total >= thresholds.established_total
        and clean_at_tier2 >= thresholds.established_at_tier2
    ):
        derived = CapabilityRating.ESTABLISHED
    elif clean_total >= thresholds.emerging_clean_cycles:
        derived = CapabilityRating.EMERGING
    else:
        derived = CapabilityRating.UNPROVEN
    return max(derived, floor)


def policy_to_payload(policy: TransitionPolicy) -> dict:
    return {
        "min_cycles_for_promotion": {
            f"{a}->{b}": n for (a, b), n in sorted(policy.min_cycles_for_promotion.items())
        },
        "error_rate_thresholds": {
            str(tier): rate for tier, rate in sorted(policy.error_rate_thresholds.items())
        },
        "consecutive_breach_limit": policy.consecutive_breach_limit,
        "critical_error_demotion_depth": policy.critical_error_demotion_depth,
        "rating_thresholds": {
            "emerging_clean_cycles": policy.rating_thresholds.emerging_clean_cycles,
            "established_total": policy.rating_thresholds.established_total,
            "established_at_tier2": policy.rating_thresholds.established_at_tier2,
            "mature_total": policy.rating_thresholds.mature_total,
            "mature_at_tier3": policy.rating_thresholds.mature_at_tier3,
        },
    }


def policy_from_payload(raw: dict) -> TransitionPolicy:
    defaults = TransitionPolicy.default()
    min_cycles = dict(defaults.min_cycles_for_promotion)
    for key, value in raw.get("min_cycles_for_promotion", {}).items():
        a, b = key.split("->")
        min_cycles[(int(a), int(b))] = int(value)
    thresholds = dict(defaults.error_rate_thresholds)
    for key, value in raw.get("error_rate_thresholds", {}).items():
        thresholds[int(key)] = float(value)
    rt_raw = raw.get("rating_thresholds", {})
    rating = replace(defaults.rating_thresholds, **{k: int(v) for k, v in rt_raw.items()})
    policy = TransitionPolicy(
        min_cycles_for_promotion=min_cycles,
        error_rate_thresholds=thresholds,
        consecutive_breach_limit=int(
            raw.get("consecutive_breach_limit", defaults.consecutive_breach_limit)
        ),
        critical_error_demotion_depth=int(
            raw.get("critical_error_demotion_depth", defaults.critical_error_demotion_depth)
        ),
        rating_thresholds=rating,
    )
    policy.validate()
    return policy
