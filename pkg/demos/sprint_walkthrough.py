"""Walk through two months of a governed hybrid team, narrated.

Builds the bundled showcase registry in a temp directory and reads the
story back out of it: what got delegated at which tier, what the
delegation cost in points, what escaped, and how the governance knobs
reacted. Run it directly:

    python3 demos/sprint_walkthrough.py
"""

import tempfile
from pathlib import Path

from hybridgov.fixtures import build_demo_registry


def say(text=""):
    print(text)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        engine = build_demo_registry(Path(tmp) / "registry.jsonl")
        snapshot = engine.snapshot

        say("== cycle 7 planning: six items, six different calls ==")
        for item_id in ("it-api-21", "it-ut-22", "it-docs-23",
                        "it-sec-24", "it-rel-25", "it-mig-26"):
            item = snapshot.items[item_id]
            marker = ""
            if item.tier is not item.default_tier:
                marker = f" (matrix said {item.default_tier.wire}, team overrode)"
            say(f"  {item_id:<11} {item.title:<28} -> {item.tier.wire}{marker}")

        say()
        say("== what supervised delegation does to an 8-point item ==")
        api = snapshot.items["it-api-21"]
        breakdown = engine.estimate_item("it-api-21")
        say(f"  human baseline: {api.baseline_points:g} points")
        say(f"  at {api.tier.wire}: spec {breakdown.specification:g}, "
            f"generation {breakdown.generation:g}, validation {breakdown.validation:g} "
            f"-> {breakdown.total} points total")

        say()
        say("== review telemetry for the endpoint work, cycle 7 ==")
        metrics = engine.metrics("api_endpoints", 7)
        say(f"  outcomes recorded: {metrics.outcomes_count}")
        say(f"  first-pass acceptance: {metrics.first_pass_rate:.0%}")
        say(f"  mean review time: {metrics.mean_review_minutes:.0f} minutes")

        say()
        say("== the escape, and what sampling did about it ==")
        sampling = snapshot.task_types["unit_tests"].sampling
        for adj in sampling.history:
            say(f"  cycle {adj.cycle}: {adj.old_rate:.0%} -> {adj.new_rate:.0%}  ({adj.reason})")
        say(f"  current rate: {sampling.rate:.0%}")

        say()
        say("== trust is asymmetric: the docs rating after the fabricated citation ==")
        docs = snapshot.task_types["user_docs"]
        say(f"  user_docs rating now: {docs.derived_rating(snapshot.policy).wire}")
        follow_up = snapshot.items["it-docs-27"]
        say(f"  cycle 8 follow-up {follow_up.item_id!r} classified {follow_up.tier.wire}")

        say()
        say("== the board never forgets a process violation ==")
        for violation in snapshot.board_metadata()["violations"]:
            say(f"  cycle {violation['cycle']}: {violation['person']} - {violation['note']}")

        say()
        say("== erosion watch at the cycle 8 retro ==")
        for status in engine.erosion_report():
            if status.flagged:
                say(f"  {status.task_type_id}: {status.cycles_since_human_only} cycles "
                    "since humans did this work themselves")

        engine.close()


if __name__ == "__main__":
    main()
