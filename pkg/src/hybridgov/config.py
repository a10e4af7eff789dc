"""YAML configuration: one file that holds every team-tunable knob.

Loading is strict. Unknown keys anywhere in the tree are rejected so a
typo like ``erosion_treshold`` fails loudly instead of silently running
with the default.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .planning import EffortModelParams
from .quality import LintConfig, SamplingDefaults
from .simulator import SimConfig
from .tiers import GovernanceError
from .transitions import TransitionPolicy, policy_from_payload, policy_to_payload

CONFIG_SCHEMA_VERSION = 1
DEFAULT_CONFIG_FILENAME = "hybridgov.yaml"
DEFAULT_REGISTRY_PATH = "governance/registry.jsonl"


class ConfigError(GovernanceError):
    pass


class ConfigFileMissing(ConfigError, FileNotFoundError):
    """Also a FileNotFoundError so callers can route it as an I/O failure."""


@dataclass(frozen=True)
class TeamConfig:
    size: int = 5
    roster: tuple[str, ...] = ("sm", "po", "dev1", "dev2", "dev3")

    def validate(self) -> None:
        if self.size < 1:
            raise ConfigError("team size must be >= 1")
        if not self.roster:
            raise ConfigError("roster must name at least one person")
        if len(set(self.roster)) != len(self.roster):
            raise ConfigError("roster names must be unique")


@dataclass(frozen=True)
class ErosionConfig:
    threshold: int = 6
    grace_cycles: int = 1

    def validate(self) -> None:
        if self.threshold < 1:
            raise ConfigError("erosion threshold must be >= 1")
        if self.grace_cycles < 0:
            raise ConfigError("erosion grace_cycles must be >= 0")


@dataclass(frozen=True)
class LintSettings:
    violation_window_cycles: int = 3
    violation_repeat_limit: int = 2

    def validate(self) -> None:
        if self.violation_window_cycles < 1:
            raise ConfigError("violation_window_cycles must be >= 1")
        if self.violation_repeat_limit < 1:
            raise ConfigError("violation_repeat_limit must be >= 1")


@dataclass(frozen=True)
class GovernanceConfig:
    registry_path: str = DEFAULT_REGISTRY_PATH
    team: TeamConfig = TeamConfig()
    policy: TransitionPolicy = field(default_factory=TransitionPolicy.default)
    effort_model: EffortModelParams = EffortModelParams()
    sampling: SamplingDefaults = SamplingDefaults()
    erosion: ErosionConfig = ErosionConfig()
    lint: LintSettings = LintSettings()

    def validate(self) -> None:
        if not self.registry_path:
            raise ConfigError("registry_path is required")
        self.team.validate()
        self.policy.validate()
        self.effort_model.validate()
        self.sampling.validate()
        self.erosion.validate()
        self.lint.validate()

    def lint_config(self) -> LintConfig:
        return LintConfig(
            violation_window_cycles=self.lint.violation_window_cycles,
            violation_repeat_limit=self.lint.violation_repeat_limit,
            erosion_threshold=self.erosion.threshold,
            erosion_grace_cycles=self.erosion.grace_cycles,
        )


# allowed keys per mapping node; None marks a leaf
_SCHEMA_TREE = {
    "schema_version": None,
    "registry_path": None,
    "team": {"size": None, "roster": None},
    "policy": {
        "min_cycles_for_promotion": "open",
        "error_rate_thresholds": "open",
        "consecutive_breach_limit": None,
        "critical_error_demotion_depth": None,
        "rating_thresholds": {
            "emerging_clean_cycles": None,
            "established_total": None,
            "established_at_tier2": None,
            "mature_total": None,
            "mature_at_tier3": None,
        },
    },
    "effort_model": {
        "tier2_specification_pct": None,
        "tier2_generation_pct": None,
        "tier2_validation_pct": None,
        "tier3_monitoring_pct": None,
        "tier3_item_validation_pct": None,
        "tier3_exception_reserve_pct": None,
        "tier4_boundary_pct": None,
        "tier4_audit_pct": None,
        "tier4_exception_pct": None,
    },
    "sampling": {
        "initial_rate": None,
        "step": None,
        "clean_cycles_to_lower": None,
        "minimum_rate": None,
    },
    "erosion": {"threshold": None, "grace_cycles": None},
    "lint": {"violation_window_cycles": None, "violation_repeat_limit": None},
}


def _reject_unknown_keys(node, schema, path: str) -> None:
    if schema == "open" or schema is None:
        return
    if not isinstance(node, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping")
    for key, value in node.items():
        if key not in schema:
            raise ConfigError(f"unknown config key: {path}{key}")
        _reject_unknown_keys(value, schema[key], f"{path}{key}.")


def parse_config(raw: dict) -> GovernanceConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _reject_unknown_keys(raw, _SCHEMA_TREE, "")
    version = raw.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {version!r}")

    team_raw = raw.get("team", {})
    team = TeamConfig(
        size=int(team_raw.get("size", 5)),
        roster=tuple(str(n) for n in team_raw.get("roster", TeamConfig().roster)),
    )
    try:
        policy = policy_from_payload(raw.get("policy", {}))
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad policy section: {exc}") from exc

    effort_raw = raw.get("effort_model", {})
    try:
        effort = (
            EffortModelParams.from_payload(effort_raw) if effort_raw else EffortModelParams()
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad effort_model section: {exc}") from exc

    sampling_raw = raw.get("sampling", {})
    defaults = SamplingDefaults()
    sampling = SamplingDefaults(
        initial_rate=float(sampling_raw.get("initial_rate", defaults.initial_rate)),
        step=float(sampling_raw.get("step", defaults.step)),
        clean_cycles_to_lower=int(
            sampling_raw.get("clean_cycles_to_lower", defaults.clean_cycles_to_lower)
        ),
        minimum_rate=float(sampling_raw.get("minimum_rate", defaults.minimum_rate)),
    )
    erosion_raw = raw.get("erosion", {})
    erosion = ErosionConfig(
        threshold=int(erosion_raw.get("threshold", 6)),
        grace_cycles=int(erosion_raw.get("grace_cycles", 1)),
    )
    lint_raw = raw.get("lint", {})
    lint_settings = LintSettings(
        violation_window_cycles=int(lint_raw.get("violation_window_cycles", 3)),
        violation_repeat_limit=int(lint_raw.get("violation_repeat_limit", 2)),
    )
    config = GovernanceConfig(
        registry_path=str(raw.get("registry_path", DEFAULT_REGISTRY_PATH)),
        team=team,
        policy=policy,
        effort_model=effort,
        sampling=sampling,
        erosion=erosion,
        lint=lint_settings,
    )
    try:
        config.validate()
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return config


def load_config(path: Path | str) -> GovernanceConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigFileMissing(f"no config file at {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return parse_config(raw or {})


def load_sim_config(path: Path | str) -> SimConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigFileMissing(f"no simulation config at {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"simulation config is not valid YAML: {exc}") from exc
    try:
        return SimConfig.from_payload(raw or {})
    except (GovernanceError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad simulation config: {exc}") from exc


def default_config_yaml(
    team_size: int = 5,
    roster: Optional[list[str]] = None,
    config: Optional[GovernanceConfig] = None,
) -> str:
    """A fully commented starter config with every knob at its default.

    The numeric values are calibration starting points. Teams are expected
    to tune them against their own review telemetry after a few cycles.
    """
    config = config or GovernanceConfig()
    policy = policy_to_payload(config.policy)
    roster = roster or list(TeamConfig().roster)
    roster_yaml = ", ".join(roster)
    lines = f"""\
schema_version: {CONFIG_SCHEMA_VERSION}

# Where the append-only event log lives, relative to this file.
registry_path: {config.registry_path}

team:
  size: {team_size}
  roster: [{roster_yaml}]

policy:
  # Consecutive clean cycles required before each promotion step.
  # Calibration: raise these if escapes keep surfacing shortly after
  # promotions; lower them only with strong sampling coverage.
  min_cycles_for_promotion:
    1->2: {policy["min_cycles_for_promotion"]["1->2"]}
    2->3: {policy["min_cycles_for_promotion"]["2->3"]}
    3->4: {policy["min_cycles_for_promotion"]["3->4"]}
  # Per-tier error-rate ceilings (share of validated outputs with major
  # or critical findings). Exactly at the ceiling is neither clean nor a
  # breach; promotion requires strictly below.
  error_rate_thresholds:
    "1": {policy["error_rate_thresholds"]["1"]}
    "2": {policy["error_rate_thresholds"]["2"]}
    "3": {policy["error_rate_thresholds"]["3"]}
    "4": {policy["error_rate_thresholds"]["4"]}
  # Breached cycles in a row before a demotion is forced.
  consecutive_breach_limit: {config.policy.consecutive_breach_limit}
  # How many tiers a critical error drops a task type, floor ai_restricted.
  critical_error_demotion_depth: {config.policy.critical_error_demotion_depth}
  rating_thresholds:
    emerging_clean_cycles: {config.policy.rating_thresholds.emerging_clean_cycles}
    established_total: {config.policy.rating_thresholds.established_total}
    established_at_tier2: {config.policy.rating_thresholds.established_at_tier2}
    mature_total: {config.policy.rating_thresholds.mature_total}
    mature_at_tier3: {config.policy.rating_thresholds.mature_at_tier3}

effort_model:
  # Tier 2 fractions of the human baseline. Specification must stay in
  # [0.15, 0.30] and validation in [0.30, 0.60]; estimates outside those
  # bands mean the delegation, not the numbers, needs rethinking.
  tier2_specification_pct: {config.effort_model.tier2_specification_pct}
  tier2_generation_pct: {config.effort_model.tier2_generation_pct}
  tier2_validation_pct: {config.effort_model.tier2_validation_pct}
  tier3_monitoring_pct: {config.effort_model.tier3_monitoring_pct}
  tier3_item_validation_pct: {config.effort_model.tier3_item_validation_pct}
  tier3_exception_reserve_pct: {config.effort_model.tier3_exception_reserve_pct}
  tier4_boundary_pct: {config.effort_model.tier4_boundary_pct}
  tier4_audit_pct: {config.effort_model.tier4_audit_pct}
  tier4_exception_pct: {config.effort_model.tier4_exception_pct}

sampling:
  # Tier 3/4 sampled-review defaults. An escaped defect raises the rate
  # one step; a full run of clean cycles lowers it one step.
  initial_rate: {config.sampling.initial_rate}
  step: {config.sampling.step}
  clean_cycles_to_lower: {config.sampling.clean_cycles_to_lower}
  minimum_rate: {config.sampling.minimum_rate}

erosion:
  # Cycles without human-only execution before a task type is flagged,
  # and how many flagged cycles are tolerated before lint complains.
  threshold: {config.erosion.threshold}
  grace_cycles: {config.erosion.grace_cycles}

lint:
  violation_window_cycles: {config.lint.violation_window_cycles}
  violation_repeat_limit: {config.lint.violation_repeat_limit}
"""
    return lines


def write_default_config(
    path: Path | str, team_size: int = 5, roster=None, config: Optional[GovernanceConfig] = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(default_config_yaml(team_size, roster, config), encoding="utf-8")
    return path
