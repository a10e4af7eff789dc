import math
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from hybridgov.quality import SamplingDefaults
from hybridgov.simulator import (
    SimConfig,
    SimReviewers,
    SimTaskType,
    SimulationError,
    analytic_escape_rate,
    run_simulation,
    sweep,
)
from hybridgov.tiers import AutonomyTier
from hybridgov.transitions import TransitionPolicy


def frozen_config(**overrides):
    """Governance loops off: pure review economics."""
    base = dict(
        seed=2026,
        cycles=4,
        task_types=(
            SimTaskType(
                "api",
                consequence="medium",
                capability="mature",
                error_rate=0.2,
                outputs_per_cycle=10000,
            ),
        ),
        reviewers=SimReviewers(
            detection_skill=1.0, skill_decay=0.0, skill_recovery=1.0, integration_catch=0.5
        ),
        sampling=SamplingDefaults(initial_rate=0.25),
        transitions_enabled=False,
        sampling_adjustment_enabled=False,
        erosion_schedule_enabled=False,
    )
    base.update(overrides)
    return SimConfig(**base)


# -- closed form, checked against an explicit outcome tree


def branch_tree_escape_rate(e, s, d, i):
    # every leaf of the per-output probability tree, spelled out
    branches = [
        (e * s * d, False),                    # defect, reviewed, caught
        (e * s * (1 - d) * i, False),          # defect, reviewed, missed, net caught it
        (e * s * (1 - d) * (1 - i), True),     # defect, reviewed, missed, escaped
        (e * (1 - s) * i, False),              # defect, unreviewed, net caught it
        (e * (1 - s) * (1 - i), True),         # defect, unreviewed, escaped
        (1 - e, False),                        # no defect
    ]
    total = sum(p for p, _ in branches)
    assert math.isclose(total, 1.0, abs_tol=1e-9)
    return sum(p for p, escaped in branches if escaped)


@given(
    e=st.floats(min_value=0, max_value=1),
    s=st.floats(min_value=0, max_value=1),
    d=st.floats(min_value=0, max_value=1),
    i=st.floats(min_value=0, max_value=1),
)
def test_analytic_rate_matches_branch_tree(e, s, d, i):
    assert analytic_escape_rate(e, s, d, i) == pytest.approx(
        branch_tree_escape_rate(e, s, d, i), abs=1e-12
    )


def test_analytic_rate_at_reference_point():
    assert analytic_escape_rate(0.2, 0.25, 1.0, 0.5) == pytest.approx(0.075)


def test_analytic_rate_rejects_junk():
    with pytest.raises(SimulationError):
        analytic_escape_rate(1.5, 0.5, 0.5, 0.5)
    with pytest.raises(SimulationError):
        analytic_escape_rate(0.5, 0.5, 0.5, -0.1)


# -- Monte Carlo agreement


def test_frozen_run_matches_closed_form():
    result = run_simulation(frozen_config())
    assert result.summary["outputs"] >= 10000
    assert result.summary["measured_escape_rate"] == pytest.approx(0.075, abs=0.01)
    # every cycle row carries the same analytic value in a frozen run
    values = {row.analytic_escape_rate for row in result.rows}
    assert len(values) == 1
    assert values.pop() == pytest.approx(0.075)


def test_frozen_run_holds_tier_and_fraction_constant():
    result = run_simulation(frozen_config(cycles=8))
    assert {row.tier for row in result.rows} == {"tier3"}
    assert {row.review_fraction for row in result.rows} == {0.25}


def test_monte_carlo_tracks_formula_at_other_points():
    config = frozen_config(
        seed=11,
        reviewers=SimReviewers(
            detection_skill=0.7, skill_decay=0.0, skill_recovery=0.7, integration_catch=0.3
        ),
    )
    expected = analytic_escape_rate(0.2, 0.25, 0.7, 0.3)
    result = run_simulation(config)
    n = result.summary["outputs"]
    sigma = math.sqrt(expected * (1 - expected) / n)
    assert abs(result.summary["measured_escape_rate"] - expected) < 5 * sigma


# -- determinism


def test_same_config_same_bits():
    a = run_simulation(frozen_config())
    b = run_simulation(frozen_config())
    assert a.canonical() == b.canonical()


def test_different_seed_different_stream():
    a = run_simulation(frozen_config(seed=1))
    b = run_simulation(frozen_config(seed=2))
    assert a.canonical() != b.canonical()


def test_config_payload_round_trip():
    config = frozen_config()
    again = SimConfig.from_payload(config.to_payload())
    assert run_simulation(again).canonical() == run_simulation(config).canonical()


# -- skill decay and the human-only schedule


def test_skill_decays_only_while_delegated():
    config = frozen_config(
        cycles=5,
        reviewers=SimReviewers(
            detection_skill=0.9, skill_decay=0.1, skill_recovery=0.9, integration_catch=0.5
        ),
    )
    result = run_simulation(config)
    skills = [row.detection_skill for row in result.rows]
    assert skills == sorted(skills, reverse=True)
    assert skills[0] == pytest.approx(0.9 * 0.9)
    assert skills[-1] == pytest.approx(0.9 * 0.9**5)


def test_erosion_schedule_restores_skill():
    config = frozen_config(
        cycles=13,
        erosion_schedule_enabled=True,
        erosion_threshold=6,
        reviewers=SimReviewers(
            detection_skill=0.9, skill_decay=0.1, skill_recovery=0.9, integration_catch=0.5
        ),
    )
    result = run_simulation(config)
    human_only_cycles = [row.cycle for row in result.rows if row.human_only]
    assert human_only_cycles == [6, 12]
    for row in result.rows:
        if row.human_only:
            assert row.outputs == 0
            assert row.detection_skill == pytest.approx(0.9)
    # between restorations the skill only decays
    segment = [r.detection_skill for r in result.rows if 7 <= r.cycle <= 11]
    assert segment == sorted(segment, reverse=True)


def test_ai_restricted_types_run_human_only_every_cycle():
    config = frozen_config(
        cycles=3,
        task_types=(
            SimTaskType(
                "security",
                structuredness="low",
                verifiability="low",
                consequence="high",
                capability="unproven",
                error_rate=0.2,
                outputs_per_cycle=100,
            ),
        ),
    )
    result = run_simulation(config)
    assert all(row.human_only for row in result.rows)
    assert all(row.tier == "ai_restricted" for row in result.rows)
    assert result.summary["outputs"] == 0


# -- transitions ride the real rules


def test_clean_history_promotes_on_schedule():
    config = SimConfig(
        seed=3,
        cycles=9,
        task_types=(
            SimTaskType(
                "reports",
                structuredness="high",
                verifiability="medium",
                consequence="high",
                capability="established",
                error_rate=0.0,
                outputs_per_cycle=40,
            ),
        ),
        reviewers=SimReviewers(detection_skill=0.9, skill_decay=0.0, skill_recovery=0.9),
        transitions_enabled=True,
        sampling_adjustment_enabled=False,
        erosion_schedule_enabled=False,
    )
    result = run_simulation(config)
    # (high, medium, established) at high consequence starts supervised low
    assert result.rows[0].tier == "tier1"
    promotions = [(row.cycle, row.transition) for row in result.rows if row.transition]
    # tier1 needs 3 clean cycles, then tier2 needs 5 more
    assert promotions[0] == (3, "promotion:evidence_review:tier2")
    assert promotions[1] == (8, "promotion:evidence_review:tier3")
    assert result.summary["task_types"][0]["promotions"] == 2


def test_critical_errors_demote_without_delay():
    config = SimConfig(
        seed=3,
        cycles=4,
        task_types=(
            SimTaskType(
                "api",
                error_rate=0.5,
                critical_share=1.0,
                outputs_per_cycle=50,
            ),
        ),
        reviewers=SimReviewers(detection_skill=1.0, skill_decay=0.0, skill_recovery=1.0),
        transitions_enabled=True,
        sampling_adjustment_enabled=False,
        erosion_schedule_enabled=False,
    )
    result = run_simulation(config)
    first = result.rows[0]
    assert first.criticals > 0
    assert first.transition == "demotion:critical_error:tier1"
    # the slide continues until there is nothing left to delegate
    tiers = [row.tier for row in result.rows]
    assert tiers[-1] == "ai_restricted"


def test_breach_streak_demotes_at_the_limit():
    policy = TransitionPolicy.default()
    config = SimConfig(
        seed=9,
        cycles=3,
        task_types=(
            SimTaskType("api", error_rate=0.5, outputs_per_cycle=200),
        ),
        reviewers=SimReviewers(detection_skill=1.0, skill_decay=0.0, skill_recovery=1.0),
        transitions_enabled=True,
        sampling_adjustment_enabled=False,
        erosion_schedule_enabled=False,
    )
    result = run_simulation(config)
    # error rate 0.5 versus the tier2 threshold 0.10: breach every cycle,
    # demotion lands exactly at the consecutive-breach limit
    demotion_cycle = next(row.cycle for row in result.rows if row.transition)
    assert demotion_cycle == policy.consecutive_breach_limit
    assert "demotion:consecutive_breach" in result.rows[demotion_cycle - 1].transition


def test_sampling_adjustment_runs_inside_the_sim():
    config = SimConfig(
        seed=4,
        cycles=6,
        task_types=(
            SimTaskType(
                "api",
                consequence="medium",
                capability="mature",
                error_rate=0.3,
                outputs_per_cycle=200,
            ),
        ),
        reviewers=SimReviewers(detection_skill=0.5, skill_decay=0.0, skill_recovery=0.5),
        transitions_enabled=False,
        sampling_adjustment_enabled=True,
        erosion_schedule_enabled=False,
    )
    result = run_simulation(config)
    fractions = [row.review_fraction for row in result.rows]
    # plenty of escapes at these settings: the rate must have been raised
    assert fractions[-1] > fractions[0]
    assert result.summary["task_types"][0]["final_sampling_rate"] <= 1.0


# -- sweeps and validation


def test_sweep_orders_rows_and_moves_the_needle():
    rows = sweep(frozen_config(), "integration_catch", [0.0, 0.5, 1.0])
    assert [row["value"] for row in rows] == [0.0, 0.5, 1.0]
    rates = [row["measured_escape_rate"] for row in rows]
    assert rates[0] > rates[1] > rates[2]
    assert rates[2] == 0.0


def test_sweep_rejects_unknown_parameter():
    with pytest.raises(SimulationError):
        sweep(frozen_config(), "vibes", [0.1])


def test_config_validation():
    with pytest.raises(SimulationError):
        SimConfig(rng="mersenne").validate()
    with pytest.raises(SimulationError):
        SimConfig(cycles=0).validate()
    with pytest.raises(SimulationError):
        SimConfig(
            task_types=(SimTaskType("a"), SimTaskType("a"))
        ).validate()
    with pytest.raises(SimulationError):
        SimConfig(task_types=(SimTaskType("a", error_rate=1.5),)).validate()
    with pytest.raises(SimulationError):
        replace(frozen_config(), seed=-1).validate()


def test_csv_exports_are_well_formed():
    result = run_simulation(frozen_config(cycles=2))
    series = result.time_series_csv().strip().splitlines()
    assert series[0].startswith("cycle,task_type_id,tier")
    assert len(series) == 1 + 2
    summary = result.summary_csv().strip().splitlines()
    assert len(summary) == 2
    assert summary[1].startswith("api,tier3")
