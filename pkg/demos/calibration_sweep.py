"""Calibrate governance knobs against the delivery simulator.

Two quick studies on a single generated-code task type:

  1. sanity: the Monte Carlo escape rate against the closed form, with
     every adaptive mechanism switched off
  2. a sweep over integration-net strength, governance fully on, to see
     where escapes stop being the integration suite's problem

    python3 demos/calibration_sweep.py
"""

from hybridgov.quality import SamplingDefaults
from hybridgov.simulator import (
    SimConfig,
    SimReviewers,
    SimTaskType,
    analytic_escape_rate,
    run_simulation,
    sweep,
)

BASE = SimConfig(
    seed=2026,
    cycles=25,
    task_types=(
        SimTaskType(
            "codegen",
            structuredness="high",
            verifiability="high",
            consequence="low",
            capability="established",
            error_rate=0.20,
            outputs_per_cycle=500,
        ),
    ),
    reviewers=SimReviewers(
        detection_skill=1.0, skill_decay=0.0, skill_recovery=1.0, integration_catch=0.5
    ),
    sampling=SamplingDefaults(initial_rate=0.25, step=0.10,
                              clean_cycles_to_lower=3, minimum_rate=0.10),
    transitions_enabled=False,
    sampling_adjustment_enabled=False,
    erosion_schedule_enabled=False,
)


def main():
    result = run_simulation(BASE)
    row = result.summary["task_types"][0]
    expected = analytic_escape_rate(0.20, 0.25, 1.0, 0.5)
    print("== closed form vs Monte Carlo (static world) ==")
    print(f"  outputs simulated:   {row['outputs']}")
    print(f"  analytic escape:     {expected:.4f}")
    print(f"  measured escape:     {row['measured_escape_rate']:.4f}")
    print(f"  absolute difference: {abs(row['measured_escape_rate'] - expected):.4f}")

    print()
    print("== integration-net sweep (governance on) ==")
    print(f"  {'catch':>6}  {'escape rate':>11}  final tier")
    live = SimConfig(
        seed=2026,
        cycles=20,
        task_types=BASE.task_types,
        reviewers=SimReviewers(detection_skill=0.85, skill_decay=0.02,
                               skill_recovery=0.85, integration_catch=0.5),
    )
    for entry in sweep(live, "integration_catch", [0.0, 0.25, 0.5, 0.75, 1.0]):
        tiers = ", ".join(f"{k}={v}" for k, v in entry["final_tiers"].items())
        print(f"  {entry['value']:>6.2f}  {entry['measured_escape_rate']:>11.4f}  {tiers}")


if __name__ == "__main__":
    main()
