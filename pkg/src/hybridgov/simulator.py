"""Monte Carlo validation-economics simulator.

Models a stream of AI-produced outputs per task type per cycle: each
output may carry a defect, each defect may be caught by human review
(full review at tiers 1-2, sampled review at tiers 3-4), and uncaught
defects may still be stopped at integration. What slips past both is an
escaped defect.

Governance decisions are not reimplemented here. The simulator classifies
with the real decision matrix, asks the real promotion checker, applies
the real demotion depths, and moves sampling rates with the real
adjustment rule. Toggles freeze any of those loops so a run can isolate
the pure review economics; the closed-form escape rate then applies and
the acceptance tests pin the simulator against it.

Runs are bit-identical for a given config and seed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .decision import classify
from .quality import SamplingDefaults, SamplingPlan, adjust_sampling
from .registry import canonical_json
from .tiers import Assessment, AutonomyTier, GovernanceError
from .transitions import (
    CycleSummary,
    EvidenceLedger,
    TransitionPolicy,
    TransitionTrigger,
    check_promotion,
    count_trailing_breaches,
)

RNG_KIND = "pcg64"


class SimulationError(GovernanceError):
    pass


def analytic_escape_rate(
    error_rate: float,
    review_fraction: float,
    detection_skill: float,
    integration_catch: float,
) -> float:
    """Closed-form escape probability per output.

    A defect escapes when it is either reviewed and missed, or never
    reviewed at all, and then also slips through integration.
    """
    for name, value in (
        ("error_rate", error_rate),
        ("review_fraction", review_fraction),
        ("detection_skill", detection_skill),
        ("integration_catch", integration_catch),
    ):
        if not 0.0 <= value <= 1.0:
            raise SimulationError(f"{name} must be in [0, 1]")
    missed_by_review = review_fraction * (1.0 - detection_skill) + (1.0 - review_fraction)
    return error_rate * missed_by_review * (1.0 - integration_catch)


@dataclass(frozen=True)
class SimReviewers:
    """The human side of the loop: skill, decay, and the integration net."""

    detection_skill: float = 0.85
    skill_decay: float = 0.0
    skill_recovery: float = 0.85
    integration_catch: float = 0.5

    def validate(self) -> None:
        for name, value in (
            ("detection_skill", self.detection_skill),
            ("skill_decay", self.skill_decay),
            ("skill_recovery", self.skill_recovery),
            ("integration_catch", self.integration_catch),
        ):
            if not 0.0 <= value <= 1.0:
                raise SimulationError(f"{name} must be in [0, 1]")

    def to_payload(self) -> dict:
        return {
            "detection_skill": self.detection_skill,
            "skill_decay": self.skill_decay,
            "skill_recovery": self.skill_recovery,
            "integration_catch": self.integration_catch,
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "SimReviewers":
        return cls(**{k: float(v) for k, v in raw.items()})


@dataclass(frozen=True)
class SimTaskType:
    task_type_id: str
    structuredness: str = "high"
    verifiability: str = "high"
    consequence: str = "medium"
    capability: str = "established"
    error_rate: float = 0.15
    outputs_per_cycle: int = 50
    critical_share: float = 0.0

    def assessment(self) -> Assessment:
        return Assessment.parse(
            {
                "structuredness": self.structuredness,
                "verifiability": self.verifiability,
                "consequence": self.consequence,
                "capability": self.capability,
            }
        )

    def validate(self) -> None:
        if not self.task_type_id:
            raise SimulationError("task_type_id is required")
        if not 0.0 <= self.error_rate <= 1.0:
            raise SimulationError("error_rate must be in [0, 1]")
        if not 0.0 <= self.critical_share <= 1.0:
            raise SimulationError("critical_share must be in [0, 1]")
        if self.outputs_per_cycle < 1:
            raise SimulationError("outputs_per_cycle must be >= 1")
        self.assessment()  # raises on junk scale values

    def to_payload(self) -> dict:
        return {
            "task_type_id": self.task_type_id,
            "structuredness": self.structuredness,
            "verifiability": self.verifiability,
            "consequence": self.consequence,
            "capability": self.capability,
            "error_rate": self.error_rate,
            "outputs_per_cycle": self.outputs_per_cycle,
            "critical_share": self.critical_share,
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "SimTaskType":
        return cls(
            task_type_id=str(raw["task_type_id"]),
            structuredness=str(raw.get("structuredness", "high")),
            verifiability=str(raw.get("verifiability", "high")),
            consequence=str(raw.get("consequence", "medium")),
            capability=str(raw.get("capability", "established")),
            error_rate=float(raw.get("error_rate", 0.15)),
            outputs_per_cycle=int(raw.get("outputs_per_cycle", 50)),
            critical_share=float(raw.get("critical_share", 0.0)),
        )


@dataclass(frozen=True)
class SimConfig:
    seed: int = 7
    cycles: int = 12
    task_types: tuple[SimTaskType, ...] = (SimTaskType("api_endpoints"),)
    reviewers: SimReviewers = SimReviewers()
    sampling: SamplingDefaults = SamplingDefaults()
    policy: TransitionPolicy = field(default_factory=TransitionPolicy.default)
    transitions_enabled: bool = True
    sampling_adjustment_enabled: bool = True
    erosion_schedule_enabled: bool = True
    erosion_threshold: int = 6
    rng: str = RNG_KIND

    def validate(self) -> None:
        if self.seed < 0:
            raise SimulationError("seed must be >= 0")
        if self.cycles < 1:
            raise SimulationError("cycles must be >= 1")
        if not self.task_types:
            raise SimulationError("at least one task type is required")
        ids = [t.task_type_id for t in self.task_types]
        if len(set(ids)) != len(ids):
            raise SimulationError("task_type_ids must be unique")
        if self.rng != RNG_KIND:
            raise SimulationError(f"unsupported rng {self.rng!r}; only {RNG_KIND}")
        if self.erosion_threshold < 1:
            raise SimulationError("erosion_threshold must be >= 1")
        for task_type in self.task_types:
            task_type.validate()
        self.reviewers.validate()
        self.sampling.validate()
        self.policy.validate()

    def to_payload(self) -> dict:
        return {
            "seed": self.seed,
            "cycles": self.cycles,
            "task_types": [t.to_payload() for t in self.task_types],
            "reviewers": self.reviewers.to_payload(),
            "sampling": {
                "initial_rate": self.sampling.initial_rate,
                "step": self.sampling.step,
                "clean_cycles_to_lower": self.sampling.clean_cycles_to_lower,
                "minimum_rate": self.sampling.minimum_rate,
            },
            "transitions_enabled": self.transitions_enabled,
            "sampling_adjustment_enabled": self.sampling_adjustment_enabled,
            "erosion_schedule_enabled": self.erosion_schedule_enabled,
            "erosion_threshold": self.erosion_threshold,
            "rng": self.rng,
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "SimConfig":
        sampling_raw = raw.get("sampling", {})
        config = cls(
            seed=int(raw.get("seed", 7)),
            cycles=int(raw.get("cycles", 12)),
            task_types=tuple(
                SimTaskType.from_payload(t) for t in raw.get("task_types", [])
            )
            or (SimTaskType("api_endpoints"),),
            reviewers=SimReviewers.from_payload(raw.get("reviewers", {}))
            if raw.get("reviewers")
            else SimReviewers(),
            sampling=SamplingDefaults(
                initial_rate=float(sampling_raw.get("initial_rate", 0.20)),
                step=float(sampling_raw.get("step", 0.10)),
                clean_cycles_to_lower=int(sampling_raw.get("clean_cycles_to_lower", 3)),
                minimum_rate=float(sampling_raw.get("minimum_rate", 0.10)),
            ),
            transitions_enabled=bool(raw.get("transitions_enabled", True)),
            sampling_adjustment_enabled=bool(raw.get("sampling_adjustment_enabled", True)),
            erosion_schedule_enabled=bool(raw.get("erosion_schedule_enabled", True)),
            erosion_threshold=int(raw.get("erosion_threshold", 6)),
            rng=str(raw.get("rng", RNG_KIND)),
        )
        config.validate()
        return config


@dataclass(frozen=True)
class SimCycleRow:
    cycle: int
    task_type_id: str
    tier: str
    human_only: bool
    outputs: int
    reviewed: int
    defects: int
    review_catches: int
    integration_catches: int
    escapes: int
    criticals: int
    detection_skill: float
    review_fraction: float
    analytic_escape_rate: float
    transition: str

    FIELDS = (
        "cycle",
        "task_type_id",
        "tier",
        "human_only",
        "outputs",
        "reviewed",
        "defects",
        "review_catches",
        "integration_catches",
        "escapes",
        "criticals",
        "detection_skill",
        "review_fraction",
        "analytic_escape_rate",
        "transition",
    )

    def to_payload(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


@dataclass
class SimResult:
    config: SimConfig
    rows: list[SimCycleRow]
    summary: dict

    def to_payload(self) -> dict:
        return {
            "config": self.config.to_payload(),
            "rows": [row.to_payload() for row in self.rows],
            "summary": self.summary,
        }

    def canonical(self) -> str:
        return canonical_json(self.to_payload())

    def time_series_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(SimCycleRow.FIELDS)
        for row in self.rows:
            writer.writerow([row.to_payload()[name] for name in SimCycleRow.FIELDS])
        return out.getvalue()

    def summary_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(
            [
                "task_type_id",
                "final_tier",
                "outputs",
                "defects",
                "review_catches",
                "integration_catches",
                "escapes",
                "measured_escape_rate",
                "expected_escape_rate",
                "final_detection_skill",
                "final_sampling_rate",
                "human_only_cycles",
                "promotions",
                "demotions",
            ]
        )
        for row in self.summary["task_types"]:
            writer.writerow([row[k] for k in (
                "task_type_id",
                "final_tier",
                "outputs",
                "defects",
                "review_catches",
                "integration_catches",
                "escapes",
                "measured_escape_rate",
                "expected_escape_rate",
                "final_detection_skill",
                "final_sampling_rate",
                "human_only_cycles",
                "promotions",
                "demotions",
            )])
        return out.getvalue()


@dataclass
class _TypeState:
    spec: SimTaskType
    tier: AutonomyTier
    ledger: EvidenceLedger
    sampling: SamplingPlan
    detection_skill: float
    last_human_only: int = 0
    outputs: int = 0
    defects: int = 0
    reviewed: int = 0
    review_catches: int = 0
    integration_catches: int = 0
    escapes: int = 0
    human_only_cycles: int = 0
    promotions: int = 0
    demotions: int = 0
    analytic_weighted: float = 0.0


def _review_fraction(state: _TypeState) -> float:
    # tiers 1 and 2 get full review; 3 and 4 review the sampled share
    if state.tier.number <= 2:
        return 1.0
    return state.sampling.rate


def run_simulation(config: SimConfig) -> SimResult:
    config.validate()
    rng = np.random.default_rng(np.random.PCG64(config.seed))
    reviewers = config.reviewers

    states: list[_TypeState] = []
    for spec in config.task_types:
        decision = classify(spec.assessment())
        states.append(
            _TypeState(
                spec=spec,
                tier=decision.tier,
                ledger=EvidenceLedger(spec.task_type_id),
                sampling=SamplingPlan.initial(spec.task_type_id, config.sampling),
                detection_skill=reviewers.detection_skill,
            )
        )

    rows: list[SimCycleRow] = []
    for cycle in range(1, config.cycles + 1):
        for state in states:
            spec = state.spec
            delegated = state.tier.number >= 2
            human_only = state.tier is AutonomyTier.AI_RESTRICTED or (
                config.erosion_schedule_enabled
                and delegated
                and cycle - state.last_human_only >= config.erosion_threshold
            )

            if human_only:
                # humans run the whole cycle: skills recover, no AI outputs
                state.detection_skill = reviewers.skill_recovery
                state.last_human_only = cycle
                state.human_only_cycles += 1
                rows.append(
                    SimCycleRow(
                        cycle=cycle,
                        task_type_id=spec.task_type_id,
                        tier=state.tier.wire,
                        human_only=True,
                        outputs=0,
                        reviewed=0,
                        defects=0,
                        review_catches=0,
                        integration_catches=0,
                        escapes=0,
                        criticals=0,
                        detection_skill=round(state.detection_skill, 9),
                        review_fraction=0.0,
                        analytic_escape_rate=0.0,
                        transition="",
                    )
                )
                continue

            fraction = _review_fraction(state)
            n = spec.outputs_per_cycle
            draws = rng.random((n, 5))
            defect = draws[:, 0] < spec.error_rate
            reviewed = draws[:, 1] < fraction
            caught = defect & reviewed & (draws[:, 2] < state.detection_skill)
            uncaught = defect & ~caught
            integration_caught = uncaught & (draws[:, 3] < reviewers.integration_catch)
            escaped = uncaught & ~integration_caught
            critical = caught & (draws[:, 4] < spec.critical_share)

            counts = {
                "outputs": n,
                "reviewed": int(reviewed.sum()),
                "defects": int(defect.sum()),
                "review_catches": int(caught.sum()),
                "integration_catches": int(integration_caught.sum()),
                "escapes": int(escaped.sum()),
                "criticals": int(critical.sum()),
            }
            expected = analytic_escape_rate(
                spec.error_rate, fraction, state.detection_skill, reviewers.integration_catch
            )

            state.outputs += counts["outputs"]
            state.reviewed += counts["reviewed"]
            state.defects += counts["defects"]
            state.review_catches += counts["review_catches"]
            state.integration_catches += counts["integration_catches"]
            state.escapes += counts["escapes"]
            state.analytic_weighted += expected * n

            summary = CycleSummary(
                cycle_index=cycle,
                tier_during_cycle=state.tier,
                outputs_validated=counts["reviewed"],
                outputs_with_major_or_critical=counts["review_catches"],
                critical_count=counts["criticals"],
                sampled_fraction=fraction if state.tier.number >= 3 else None,
            )
            state.ledger.append(summary)

            # skill decays only while the AI does the work
            if delegated and reviewers.skill_decay > 0:
                state.detection_skill *= 1.0 - reviewers.skill_decay

            # sampling moves by the governance rule, never ad hoc
            if config.sampling_adjustment_enabled and state.tier.number >= 3:
                observed_escapes = counts["integration_catches"] + counts["escapes"]
                state.sampling = adjust_sampling(
                    state.sampling,
                    state.ledger.cycles,
                    observed_escapes,
                    config.sampling,
                    config.policy,
                    cycle,
                )

            transition = ""
            if config.transitions_enabled:
                transition = _apply_transitions(state, config.policy, cycle)

            rows.append(
                SimCycleRow(
                    cycle=cycle,
                    task_type_id=spec.task_type_id,
                    tier=state.tier.wire,
                    human_only=False,
                    detection_skill=round(state.detection_skill, 9),
                    review_fraction=round(fraction, 6),
                    analytic_escape_rate=round(expected, 9),
                    transition=transition,
                    **counts,
                )
            )

    overall_outputs = sum(s.outputs for s in states)
    overall_escapes = sum(s.escapes for s in states)
    summary = {
        "cycles": config.cycles,
        "outputs": overall_outputs,
        "escapes": overall_escapes,
        "measured_escape_rate": (
            round(overall_escapes / overall_outputs, 9) if overall_outputs else None
        ),
        "task_types": [
            {
                "task_type_id": s.spec.task_type_id,
                "final_tier": s.tier.wire,
                "outputs": s.outputs,
                "defects": s.defects,
                "review_catches": s.review_catches,
                "integration_catches": s.integration_catches,
                "escapes": s.escapes,
                "measured_escape_rate": (
                    round(s.escapes / s.outputs, 9) if s.outputs else None
                ),
                "expected_escape_rate": (
                    round(s.analytic_weighted / s.outputs, 9) if s.outputs else None
                ),
                "final_detection_skill": round(s.detection_skill, 9),
                "final_sampling_rate": s.sampling.rate,
                "human_only_cycles": s.human_only_cycles,
                "promotions": s.promotions,
                "demotions": s.demotions,
            }
            for s in states
        ],
    }
    return SimResult(config=config, rows=rows, summary=summary)


def _apply_transitions(state: _TypeState, policy: TransitionPolicy, cycle: int) -> str:
    """End-of-cycle tier movement using the real transition rules."""
    latest = state.ledger.cycles[-1]
    if latest.critical_count > 0 and state.tier is not AutonomyTier.AI_RESTRICTED:
        landed = state.tier.step_down(policy.critical_error_demotion_depth)
        state.tier = landed
        state.demotions += 1
        return f"demotion:{TransitionTrigger.CRITICAL_ERROR.wire}:{landed.wire}"
    breaches = count_trailing_breaches(state.ledger, policy)
    if breaches >= policy.consecutive_breach_limit and state.tier is not AutonomyTier.AI_RESTRICTED:
        landed = state.tier.step_down(1)
        state.tier = landed
        state.demotions += 1
        return f"demotion:{TransitionTrigger.CONSECUTIVE_BREACH.wire}:{landed.wire}"
    eligibility = check_promotion(state.tier, state.ledger, policy, capacity_ok=True)
    if eligibility.eligible:
        promoted = state.tier.step_up()
        state.tier = promoted
        state.promotions += 1
        return f"promotion:{TransitionTrigger.EVIDENCE_REVIEW.wire}:{promoted.wire}"
    return ""


SWEEPABLE = ("error_rate", "detection_skill", "integration_catch", "initial_sampling_rate")


def sweep(config: SimConfig, parameter: str, values: list[float]) -> list[dict]:
    """Re-run the simulation across one parameter; one summary row per value."""
    if parameter not in SWEEPABLE:
        raise SimulationError(f"parameter must be one of {SWEEPABLE}")
    rows = []
    for value in values:
        if parameter == "error_rate":
            varied = replace(
                config,
                task_types=tuple(replace(t, error_rate=value) for t in config.task_types),
            )
        elif parameter == "detection_skill":
            varied = replace(
                config,
                reviewers=replace(
                    config.reviewers, detection_skill=value, skill_recovery=value
                ),
            )
        elif parameter == "integration_catch":
            varied = replace(config, reviewers=replace(config.reviewers, integration_catch=value))
        else:
            varied = replace(
                config,
                sampling=replace(
                    config.sampling,
                    initial_rate=value,
                    minimum_rate=min(config.sampling.minimum_rate, value),
                ),
            )
        result = run_simulation(varied)
        rows.append(
            {
                "parameter": parameter,
                "value": value,
                "measured_escape_rate": result.summary["measured_escape_rate"],
                "final_tiers": {
                    t["task_type_id"]: t["final_tier"] for t in result.summary["task_types"]
                },
            }
        )
    return rows
