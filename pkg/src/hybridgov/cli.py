"""Command-line interface.

Every write goes through the engine, so the event stream a command
produces is identical to what the HTTP service would produce for the
same operation. Output is JSON on stdout (CSV for exports); exit codes:
0 ok, 1 domain rule violated, 2 I/O or corrupt registry, 3 lint found
something.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from .config import (
    DEFAULT_CONFIG_FILENAME,
    ConfigError,
    load_config,
    load_sim_config,
    write_default_config,
)
from .checklists import TASK_DOMAINS, install_templates
from .engine import GovernanceEngine
from .fixtures import build_demo_registry, demo_config
from .planning import SprintPlan, scaling_profile
from .registry import CorruptLog, canonical_json
from .simulator import SWEEPABLE, run_simulation, sweep
from .tiers import GovernanceError

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2
EXIT_LINT = 3


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))


def _open_engine(args, writable: bool = True) -> GovernanceEngine:
    return GovernanceEngine.from_config_file(args.config, writable=writable)


def _parse_findings(raw: str | None) -> list[dict]:
    if not raw:
        return []
    findings = json.loads(raw)
    if not isinstance(findings, list):
        raise ValueError("--findings must be a JSON array")
    return findings


# -- subcommand bodies


def cmd_init(args) -> int:
    directory = Path(args.dir)
    config_path = directory / DEFAULT_CONFIG_FILENAME
    if config_path.exists():
        print(f"error: {config_path} already exists", file=sys.stderr)
        return EXIT_IO
    roster = args.roster.split(",") if args.roster else None
    # the demo registry replays only under the sampling knobs it was
    # built with, so the written config has to match it
    write_default_config(
        config_path,
        team_size=args.team_size,
        roster=roster,
        config=demo_config() if args.demo else None,
    )
    created = [str(config_path)]
    if args.demo:
        engine = build_demo_registry(directory / "governance" / "registry.jsonl")
        engine.close()
        created.append(str(directory / "governance" / "registry.jsonl"))
    else:
        with GovernanceEngine.from_config_file(config_path) as engine:
            created.append(str(engine.store.path))
    if not args.minimal:
        created += [str(p) for p in install_templates(directory / "governance" / "checklists")]
    _emit({"initialized": created, "profile": scaling_profile(args.team_size).to_payload()})
    return EXIT_OK


def cmd_register(args) -> int:
    with _open_engine(args) as engine:
        event = engine.register_task_type(
            args.actor,
            args.timestamp or _now(),
            task_type_id=args.type,
            name=args.name or args.type,
            domain=args.domain,
            cycle=args.cycle,
            note=args.note,
        )
        _emit({"event_id": event.event_id, "task_type_id": args.type})
    return EXIT_OK


def cmd_classify(args) -> int:
    assessment = {
        "structuredness": args.structuredness,
        "verifiability": args.verifiability,
        "consequence": args.consequence,
        "capability": args.capability,
    }
    with _open_engine(args) as engine:
        event, decision = engine.classify_item(
            args.actor,
            args.timestamp or _now(),
            item_id=args.item,
            title=args.title,
            task_type_id=args.type,
            cycle=args.cycle,
            assessment=assessment,
            applied_tier=args.apply_tier,
            rationale=args.rationale,
            owner=args.owner,
            baseline_points=args.baseline,
        )
        _emit(
            {
                "event_id": event.event_id,
                "decision": decision.to_payload(),
                "applied_tier": event.payload["applied_tier"],
            }
        )
    return EXIT_OK


def cmd_plan(args) -> int:
    with _open_engine(args, writable=False) as engine:
        plan = engine.build_plan(
            args.sprint, args.cycle, args.items, team_validation_capacity=args.capacity
        )
        report = engine.budget(plan)
        if args.out:
            Path(args.out).write_text(canonical_json(plan.to_payload()) + "\n", encoding="utf-8")
        _emit({"plan": plan.to_payload(), "budget": report.to_payload()})
    return EXIT_OK


def cmd_record(args) -> int:
    with _open_engine(args) as engine:
        events = engine.record_outcome(
            args.actor,
            args.timestamp or _now(),
            item_id=args.item,
            reviewer=args.reviewer or args.actor,
            cycle=args.cycle,
            detected_in=args.detected_in,
            first_pass_accept=args.first_pass,
            findings=_parse_findings(args.findings),
            checklist_results=json.loads(args.checklist) if args.checklist else {},
            review_minutes=args.minutes,
        )
        _emit(
            {
                "events": [
                    {"event_id": e.event_id, "kind": e.kind.wire} for e in events
                ],
                "task_type_tier": _tier_after(engine, args.item),
            }
        )
    return EXIT_OK


def _tier_after(engine: GovernanceEngine, item_id: str):
    item = engine.snapshot.items.get(item_id)
    if item is None or not item.task_type_id:
        return None
    task_type = engine.snapshot.task_types.get(item.task_type_id)
    return task_type.current_tier.wire if task_type and task_type.current_tier else None


def cmd_demote(args) -> int:
    with _open_engine(args) as engine:
        events = engine.demote(
            args.actor,
            args.timestamp or _now(),
            task_type_id=args.type,
            trigger=args.trigger,
            cycle=args.cycle,
            rationale=args.rationale,
        )
        _emit({"events": [e.event_id for e in events], "transition": events[-1].payload})
    return EXIT_OK


def cmd_promote_check(args) -> int:
    if args.apply:
        with _open_engine(args) as engine:
            eligibility = engine.promotion_status(args.type, capacity_ok=args.capacity_confirmed)
            if not eligibility.eligible:
                _emit(eligibility.to_payload())
                return EXIT_DOMAIN
            event = engine.promote(
                args.actor,
                args.timestamp or _now(),
                task_type_id=args.type,
                cycle=args.cycle if args.cycle is not None else engine.snapshot.current_cycle,
                capacity_confirmed=args.capacity_confirmed,
                rationale=args.rationale,
            )
            _emit({"applied": True, "event_id": event.event_id, "transition": event.payload})
        return EXIT_OK
    with _open_engine(args, writable=False) as engine:
        eligibility = engine.promotion_status(args.type, capacity_ok=args.capacity_confirmed)
        _emit(eligibility.to_payload())
    return EXIT_OK


def cmd_retro(args) -> int:
    with _open_engine(args) as engine:
        report = engine.retro(
            args.actor,
            args.timestamp or _now(),
            cycle=args.cycle if args.cycle is not None else engine.snapshot.current_cycle,
            capacity_ok=args.capacity_confirmed,
        )
        _emit(report)
    return EXIT_OK


def cmd_lint(args) -> int:
    plan = None
    if args.plan:
        plan = SprintPlan.from_payload(json.loads(Path(args.plan).read_text(encoding="utf-8")))
    with _open_engine(args, writable=False) as engine:
        findings = engine.lint_report(plan)
        _emit({"findings": [f.to_payload() for f in findings], "count": len(findings)})
    return EXIT_LINT if findings else EXIT_OK


def cmd_sim(args) -> int:
    config = load_sim_config(args.sim_config)
    if args.sweep:
        if args.sweep not in SWEEPABLE:
            raise ConfigError(f"--sweep must be one of {SWEEPABLE}")
        values = [float(v) for v in args.values.split(",")]
        _emit(sweep(config, args.sweep, values))
        return EXIT_OK
    result = run_simulation(config)
    if args.format == "timeseries-csv":
        sys.stdout.write(result.time_series_csv())
    elif args.format == "summary-csv":
        sys.stdout.write(result.summary_csv())
    else:
        _emit(result.summary)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_export(args) -> int:
    with _open_engine(args, writable=False) as engine:
        if args.entity == "snapshot":
            text = canonical_json(engine.document(include_hidden=args.include_hidden)) + "\n"
        else:
            text = engine.export(args.entity)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridgov",
        description="Governance for delegating team work to AI: classify, record, review.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, actor=True):
        p.add_argument("--config", default=DEFAULT_CONFIG_FILENAME, help="path to hybridgov.yaml")
        if actor:
            p.add_argument("--actor", required=True, help="who is acting; recorded on the event")
            p.add_argument("--timestamp", default=None, help="override event timestamp (ISO 8601)")

    p = sub.add_parser("init", help="scaffold a config, registry, and checklists")
    p.add_argument("--dir", default=".", help="directory to initialize")
    p.add_argument("--team-size", type=int, default=5)
    p.add_argument("--roster", default="", help="comma-separated names for the service roster")
    p.add_argument("--minimal", action="store_true", help="skip checklist templates")
    p.add_argument("--demo", action="store_true", help="seed the showcase scenario registry")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("register", help="register a task type in the shared registry")
    common(p)
    p.add_argument("--type", required=True, help="task type id")
    p.add_argument("--name", default=None, help="display name; defaults to the id")
    p.add_argument("--domain", required=True, choices=list(TASK_DOMAINS))
    p.add_argument("--cycle", type=int, required=True)
    p.add_argument("--note", default="")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("classify", help="classify one backlog item")
    common(p)
    p.add_argument("--item", required=True)
    p.add_argument("--title", required=True)
    p.add_argument("--type", required=True, help="task type id")
    p.add_argument("--cycle", type=int, required=True)
    p.add_argument("--structuredness", required=True, choices=["low", "medium", "high"])
    p.add_argument("--verifiability", required=True, choices=["low", "medium", "high"])
    p.add_argument("--consequence", required=True, choices=["low", "medium", "high"])
    p.add_argument(
        "--capability", required=True,
        choices=["unproven", "emerging", "established", "mature"],
    )
    p.add_argument("--apply-tier", default=None, help="override the computed tier")
    p.add_argument("--rationale", default="")
    p.add_argument("--owner", default=None)
    p.add_argument("--baseline", type=float, default=None, help="human-baseline story points")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("plan", help="estimate items and budget validation capacity")
    common(p, actor=False)
    p.add_argument("--sprint", required=True)
    p.add_argument("--cycle", type=int, required=True)
    p.add_argument("--items", nargs="+", required=True)
    p.add_argument("--capacity", type=float, default=None, help="validation points available")
    p.add_argument("--out", default=None, help="also write the plan JSON here")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("record", help="record a validation outcome")
    common(p)
    p.add_argument("--item", required=True)
    p.add_argument("--reviewer", default=None, help="defaults to --actor")
    p.add_argument("--cycle", type=int, required=True)
    p.add_argument(
        "--detected-in", default="review",
        choices=["review", "sampling", "integration", "post_delivery"],
    )
    p.add_argument("--first-pass", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--findings", default=None, help='JSON array of findings')
    p.add_argument("--checklist", default=None, help="JSON object of checklist results")
    p.add_argument("--minutes", type=float, default=None)
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("demote", help="demote a task type immediately")
    common(p)
    p.add_argument("--type", required=True)
    p.add_argument(
        "--trigger", default="member_request",
        choices=["critical_error", "consecutive_breach", "capacity_shortfall", "member_request"],
    )
    p.add_argument("--cycle", type=int, required=True)
    p.add_argument("--rationale", default="")
    p.set_defaults(func=cmd_demote)

    p = sub.add_parser("promote-check", help="evaluate (and optionally apply) a promotion")
    common(p)
    p.add_argument("--type", required=True)
    p.add_argument("--cycle", type=int, default=None)
    p.add_argument("--capacity-confirmed", action="store_true")
    p.add_argument("--apply", action="store_true", help="apply the promotion when eligible")
    p.add_argument("--rationale", default="")
    p.set_defaults(func=cmd_promote_check)

    p = sub.add_parser("retro", help="run the end-of-cycle retrospective")
    common(p)
    p.add_argument("--cycle", type=int, default=None)
    p.add_argument("--capacity-confirmed", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_retro)

    p = sub.add_parser("lint", help="run anti-pattern checks; exit 3 on findings")
    common(p, actor=False)
    p.add_argument("--plan", default=None, help="sprint plan JSON to lint alongside the registry")
    p.set_defaults(func=cmd_lint)

    p = sub.add_parser("sim", help="run the governed-delivery simulator")
    p.add_argument("--sim-config", required=True, help="simulation YAML")
    p.add_argument(
        "--format", default="summary", choices=["summary", "timeseries-csv", "summary-csv"]
    )
    p.add_argument("--sweep", default=None, help=f"sweep one of {', '.join(SWEEPABLE)}")
    p.add_argument("--values", default="", help="comma-separated sweep values")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=DEFAULT_CONFIG_FILENAME)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8742)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="export registry state as CSV (or the full snapshot JSON)")
    common(p, actor=False)
    p.add_argument(
        "--entity", required=True,
        choices=["task_types", "items", "outcomes", "transitions", "violations", "snapshot"],
    )
    p.add_argument("--include-hidden", action="store_true", help="snapshot only: unmask plants")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CorruptLog as exc:
        print(f"error: corrupt registry: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GovernanceError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def entrypoint() -> None:  # pragma: no cover - thin shim for the console script
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
