import json

import pytest
import yaml

from hybridgov.cli import main
from hybridgov.simulator import SimConfig


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def init_workspace(tmp_path, capsys):
    code, out, err = run(capsys, "init", "--dir", str(tmp_path), "--minimal")
    assert code == 0, err
    return tmp_path / "hybridgov.yaml"


def test_init_creates_config_and_registry(tmp_path, capsys):
    code, out, err = run(capsys, "init", "--dir", str(tmp_path))
    assert code == 0
    payload = json.loads(out)
    assert str(tmp_path / "hybridgov.yaml") in payload["initialized"]
    assert (tmp_path / "governance" / "registry.jsonl").exists()
    assert (tmp_path / "governance" / "checklists" / "checklist_code.yaml").exists()
    assert payload["profile"]["band"]


def test_init_refuses_to_overwrite(tmp_path, capsys):
    init_workspace(tmp_path, capsys)
    code, out, err = run(capsys, "init", "--dir", str(tmp_path))
    assert code == 2
    assert "already exists" in err


def test_init_demo_seeds_scenario(tmp_path, capsys):
    code, out, err = run(capsys, "init", "--dir", str(tmp_path), "--demo", "--minimal")
    assert code == 0
    code, out, err = run(
        capsys, "export", "--config", str(tmp_path / "hybridgov.yaml"),
        "--entity", "task_types",
    )
    assert code == 0
    assert "unit_tests" in out


def classify_one(config, capsys, item="it-1", **overrides):
    argv = [
        "classify", "--config", str(config), "--actor", "po",
        "--item", item, "--title", "First endpoint", "--type", "api",
        "--cycle", "1",
        "--structuredness", overrides.get("s", "high"),
        "--verifiability", overrides.get("v", "high"),
        "--consequence", overrides.get("c", "medium"),
        "--capability", overrides.get("d", "established"),
    ]
    if overrides.get("owner", "dev1") is not None:
        argv += ["--owner", overrides.get("owner", "dev1")]
    if "baseline" in overrides:
        argv += ["--baseline", str(overrides["baseline"])]
    for flag in ("apply_tier", "rationale"):
        if flag in overrides:
            argv += [f"--{flag.replace('_', '-')}", overrides[flag]]
    return run(capsys, *argv)


def register_type(config, capsys, task_type="api"):
    code, out, err = run(
        capsys, "register", "--config", str(config), "--actor", "sm",
        "--type", task_type, "--domain", "code", "--cycle", "1",
    )
    assert code == 0, err


def test_register_duplicate_type_exits_1(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    code, out, err = run(
        capsys, "register", "--config", str(config), "--actor", "sm",
        "--type", "api", "--domain", "code", "--cycle", "2",
    )
    assert code == 1
    assert "already registered" in err


def test_classify_prints_decision(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    code, out, err = classify_one(config, capsys)
    assert code == 0, err
    payload = json.loads(out)
    assert payload["decision"]["tier"] == "tier2"
    assert payload["applied_tier"] == "tier2"
    assert payload["event_id"] == 2


def test_classify_domain_error_exits_1(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    # tier override without rationale violates the schema
    code, out, err = classify_one(config, capsys, apply_tier="tier1")
    assert code == 1
    assert "rationale" in err


def test_missing_config_exits_2(tmp_path, capsys):
    code, out, err = run(
        capsys, "lint", "--config", str(tmp_path / "absent.yaml")
    )
    assert code == 2
    assert "no config file" in err


def test_record_and_critical_demotion_flow(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    classify_one(config, capsys)
    code, out, err = run(
        capsys, "record", "--config", str(config), "--actor", "dev2",
        "--item", "it-1", "--cycle", "1", "--no-first-pass",
        "--findings", json.dumps(
            [{"severity": "critical", "category": "security", "note": "leaks tokens"}]
        ),
    )
    assert code == 0, err
    payload = json.loads(out)
    kinds = [e["kind"] for e in payload["events"]]
    assert kinds == ["outcome_recorded", "demotion_prompted", "transition_applied"]
    assert payload["task_type_tier"] == "tier1"


def test_lint_exit_codes(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    code, out, err = run(capsys, "lint", "--config", str(config))
    assert code == 0
    assert json.loads(out)["count"] == 0

    # an in-progress item nobody classified trips rule 4
    from hybridgov.engine import GovernanceEngine

    with GovernanceEngine.from_config_file(config) as engine:
        engine.set_item_status(
            "dev1", "2026-08-01T09:30:00Z", item_id="ghost", status="in_progress", cycle=1
        )
    code, out, err = run(capsys, "lint", "--config", str(config))
    assert code == 3
    findings = json.loads(out)["findings"]
    assert findings[0]["rule"] == "unclassified_item"


def test_plan_and_budget(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    classify_one(config, capsys, baseline=8)
    plan_file = tmp_path / "plan.json"
    code, out, err = run(
        capsys, "plan", "--config", str(config), "--sprint", "s1", "--cycle", "1",
        "--items", "it-1", "--capacity", "5", "--out", str(plan_file),
    )
    assert code == 0, err
    payload = json.loads(out)
    assert payload["budget"]["feasible"] is True
    assert plan_file.exists()
    # the written plan is valid lint input
    code, out, err = run(
        capsys, "lint", "--config", str(config), "--plan", str(plan_file)
    )
    assert code == 0


def test_promote_check_report_and_apply(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    from hybridgov.engine import GovernanceEngine

    with GovernanceEngine.from_config_file(config) as engine:
        for cycle in (1, 2, 3):
            engine.classify_item(
                "po", "2026-08-01T09:00:00Z",
                item_id=f"w-{cycle}", title="work", task_type_id="api", cycle=cycle,
                assessment={
                    "structuredness": "high", "verifiability": "high",
                    "consequence": "high", "capability": "established",
                },
                applied_tier="tier1", rationale="conservative start", owner="dev1",
            )
            engine.record_outcome(
                "dev2", "2026-08-01T10:00:00Z", item_id=f"w-{cycle}", reviewer="dev2",
                cycle=cycle, detected_in="review", first_pass_accept=True, findings=[],
            )
    code, out, err = run(
        capsys, "promote-check", "--config", str(config), "--actor", "sm", "--type", "api",
    )
    assert code == 0
    report = json.loads(out)
    assert report["eligible"] is False  # capacity not confirmed
    code, out, err = run(
        capsys, "promote-check", "--config", str(config), "--actor", "sm", "--type", "api",
        "--capacity-confirmed", "--apply", "--cycle", "4",
    )
    assert code == 0, err
    payload = json.loads(out)
    assert payload["applied"] is True
    assert payload["transition"]["to_tier"] == "tier2"


def test_promote_check_apply_blocked_exits_1(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    classify_one(config, capsys)
    code, out, err = run(
        capsys, "promote-check", "--config", str(config), "--actor", "sm", "--type", "api",
        "--capacity-confirmed", "--apply", "--cycle", "2",
    )
    assert code == 1
    assert json.loads(out)["eligible"] is False


def test_retro_over_demo_scenario(tmp_path, capsys):
    code, out, err = run(capsys, "init", "--dir", str(tmp_path), "--demo", "--minimal")
    assert code == 0
    code, out, err = run(
        capsys, "retro", "--config", str(tmp_path / "hybridgov.yaml"),
        "--actor", "sm", "--cycle", "8",
    )
    assert code == 0, err
    report = json.loads(out)
    assert report["cycle"] == 8
    flagged = [s for s in report["erosion"] if s["flagged"]]
    assert [s["task_type_id"] for s in flagged] == ["unit_tests"]


def test_demote_cli(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    classify_one(config, capsys)
    code, out, err = run(
        capsys, "demote", "--config", str(config), "--actor", "dev1", "--type", "api",
        "--cycle", "2", "--rationale", "too many near misses",
    )
    assert code == 0
    assert json.loads(out)["transition"]["to_tier"] == "tier1"


def test_export_csv_and_snapshot(tmp_path, capsys):
    config = init_workspace(tmp_path, capsys)
    register_type(config, capsys)
    classify_one(config, capsys)
    code, out, err = run(
        capsys, "export", "--config", str(config), "--entity", "items"
    )
    assert code == 0
    assert out.splitlines()[0].startswith("item_id,")
    assert "it-1" in out
    code, out, err = run(
        capsys, "export", "--config", str(config), "--entity", "snapshot"
    )
    assert code == 0
    snapshot = json.loads(out)
    assert snapshot["items"]["it-1"]["tier"] == "tier2"


def test_sim_summary_and_csv(tmp_path, capsys):
    sim_path = tmp_path / "sim.yaml"
    config = SimConfig(seed=11, cycles=3)
    sim_path.write_text(yaml.safe_dump(config.to_payload()), encoding="utf-8")
    code, out, err = run(capsys, "sim", "--sim-config", str(sim_path))
    assert code == 0, err
    summary = json.loads(out)
    assert summary["cycles"] == 3
    code, out, err = run(
        capsys, "sim", "--sim-config", str(sim_path), "--format", "timeseries-csv"
    )
    assert code == 0
    assert out.splitlines()[0].startswith("cycle,")


def test_sim_runs_are_reproducible(tmp_path, capsys):
    sim_path = tmp_path / "sim.yaml"
    sim_path.write_text(yaml.safe_dump(SimConfig(seed=11, cycles=3).to_payload()), encoding="utf-8")
    _, first, _ = run(capsys, "sim", "--sim-config", str(sim_path))
    _, second, _ = run(capsys, "sim", "--sim-config", str(sim_path))
    assert first == second


def test_sim_sweep(tmp_path, capsys):
    sim_path = tmp_path / "sim.yaml"
    sim_path.write_text(yaml.safe_dump(SimConfig(seed=11, cycles=2).to_payload()), encoding="utf-8")
    code, out, err = run(
        capsys, "sim", "--sim-config", str(sim_path),
        "--sweep", "integration_catch", "--values", "0.0,1.0",
    )
    assert code == 0, err
    rows = json.loads(out)
    assert [r["value"] for r in rows] == [0.0, 1.0]
    assert rows[1]["measured_escape_rate"] <= rows[0]["measured_escape_rate"]


def test_sim_bad_sweep_parameter(tmp_path, capsys):
    sim_path = tmp_path / "sim.yaml"
    sim_path.write_text(yaml.safe_dump(SimConfig(seed=1, cycles=2).to_payload()), encoding="utf-8")
    code, out, err = run(
        capsys, "sim", "--sim-config", str(sim_path), "--sweep", "gravity", "--values", "1",
    )
    assert code == 1
