"""Bundled validation checklists per output domain.

These are the review protocols Tier 2 validation runs against. Teams can
install them as YAML, edit, and load their own; the bundled set ships
with the package so a fresh workspace validates out of the box.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import yaml

CHECK_RESULTS = ("pass", "fail", "n/a")


@dataclass(frozen=True)
class ChecklistCheck:
    check_id: str
    title: str
    what_to_verify: str
    failure_modes: str


@dataclass(frozen=True)
class ChecklistTemplate:
    domain: str
    checks: tuple[ChecklistCheck, ...]

    def check_ids(self) -> list[str]:
        return [c.check_id for c in self.checks]

    def coverage_gaps(self, checklist_results: dict) -> list[str]:
        """Check ids missing from a results map, or present with junk values."""
        gaps = []
        for check in self.checks:
            value = checklist_results.get(check.check_id)
            if value not in CHECK_RESULTS:
                gaps.append(check.check_id)
        return gaps


def _t(domain: str, rows: Iterable[tuple[str, str, str, str]]) -> ChecklistTemplate:
    return ChecklistTemplate(domain, tuple(ChecklistCheck(*row) for row in rows))


CODE_TEMPLATE = _t(
    "code",
    [
        (
            "functional_correctness",
            "Functional correctness",
            "Run it, including boundary inputs; confirm outputs match the stated requirement, not just the demo case.",
            "Plausible-looking code that is subtly wrong at edges: off-by-one loops, inverted conditions, unhandled empty input.",
        ),
        (
            "business_logic",
            "Business logic alignment",
            "Compare embedded rules against the team's actual domain rules and current requirements.",
            "Confident but wrong assumptions about domain constraints; rules copied from generic patterns rather than this business.",
        ),
        (
            "security",
            "Security posture",
            "Inspect input handling, authn/authz paths, injection surfaces, and secrets handling on every new path.",
            "Missing input validation, string-built queries, credentials or tokens inlined, permissive defaults.",
        ),
        (
            "error_handling",
            "Error handling",
            "Trace failure paths; confirm errors are caught, reported, and consistent with house conventions.",
            "Happy-path-only code, swallowed exceptions, error messages that leak internals or say nothing.",
        ),
        (
            "performance",
            "Performance at scale",
            "Estimate complexity and resource use at production data sizes, not sample sizes.",
            "Quadratic scans, N+1 query patterns, unbounded memory growth that a small demo never exposes.",
        ),
        (
            "integration_compat",
            "Integration compatibility",
            "Check the change against existing interfaces, versions, naming, and layering conventions.",
            "Drift from house patterns, deprecated or version-mismatched calls, duplicated helpers that already exist.",
        ),
        (
            "hallucinated_interfaces",
            "Hallucinated interfaces",
            "Verify every imported module, called function, endpoint, and parameter actually exists in the versions used.",
            "Invented methods or options that read naturally and fail only at runtime; mixed APIs from different library versions.",
        ),
    ],
)

DOCUMENT_TEMPLATE = _t(
    "document",
    [
        (
            "factual_accuracy",
            "Factual accuracy",
            "Check every verifiable claim, name, date, and figure against a source you trust.",
            "Fluent fabrication: specific-sounding claims with no basis, outdated facts stated as current.",
        ),
        (
            "source_verification",
            "Source verification",
            "Confirm every citation or reference exists and says what the text claims it says.",
            "Invented references, real sources misquoted, links that resolve to something else.",
        ),
        (
            "logical_coherence",
            "Logical coherence",
            "Read the argument end to end; each conclusion must follow from what was actually established.",
            "Locally smooth paragraphs that contradict each other, conclusions smuggled in without support.",
        ),
        (
            "context_fit",
            "Context fit",
            "Check the document against what this audience already knows, decided, or was promised.",
            "Generic boilerplate ignoring team history, advice contradicting earlier decisions, wrong assumed reader.",
        ),
        (
            "completeness",
            "Completeness",
            "Compare coverage against the request; list what was asked for and tick it off.",
            "Confident partial answers, silently dropped requirements, missing the one case that mattered.",
        ),
        (
            "tone_register",
            "Tone and register",
            "Confirm voice and formality match the destination and the team's conventions.",
            "House-style drift, over-hedged or over-promising phrasing, marketing tone in engineering docs.",
        ),
        (
            "numerical_consistency",
            "Numerical consistency",
            "Recompute derived numbers; totals, percentages, and cross-references must agree everywhere they appear.",
            "Tables that do not sum, percentages of the wrong base, a figure quoted two ways in one document.",
        ),
    ],
)

DATA_TEMPLATE = _t(
    "data_analysis",
    [
        (
            "input_integrity",
            "Input integrity",
            "Verify the analysis read the intended data: row counts, date ranges, filters, and join keys.",
            "Silently dropped rows, wrong file or snapshot, joins that duplicate or lose records.",
        ),
        (
            "transformation_logic",
            "Transformation logic",
            "Spot-check transformations by hand on a few records from raw input to final value.",
            "Wrong aggregation level, filters applied in the wrong order, unit mismatches hidden in the middle.",
        ),
        (
            "statistical_validity",
            "Statistical validity",
            "Check that the method suits the data and the question; inspect assumptions, sample sizes, and uncertainty.",
            "Impressive metrics on invalid setups: leakage, cherry-picked windows, significance theater.",
        ),
        (
            "edge_cases",
            "Edge cases",
            "Probe nulls, zeros, duplicates, timezone boundaries, and categories absent from the sample.",
            "Pipelines that crash or, worse, return confident numbers on degenerate input.",
        ),
        (
            "output_format",
            "Output format",
            "Confirm the deliverable's schema, units, labels, and ordering match what consumers expect.",
            "Renamed columns, reordered fields, units changed without notice breaking downstream readers.",
        ),
        (
            "reproducibility",
            "Reproducibility",
            "Re-run the analysis from recorded inputs and parameters; the result must come back identical.",
            "Hidden state, unseeded randomness, manual steps that exist only in someone's shell history.",
        ),
    ],
)

BUNDLED_TEMPLATES: dict[str, ChecklistTemplate] = {
    t.domain: t for t in (CODE_TEMPLATE, DOCUMENT_TEMPLATE, DATA_TEMPLATE)
}

TASK_DOMAINS = ("code", "document", "data_analysis", "other")


def template_for_domain(domain: str) -> ChecklistTemplate | None:
    """Bundled template for a domain; None for domains without one."""
    return BUNDLED_TEMPLATES.get(domain)


def template_to_dict(template: ChecklistTemplate) -> dict:
    return {
        "domain": template.domain,
        "checks": [
            {
                "check_id": c.check_id,
                "title": c.title,
                "what_to_verify": c.what_to_verify,
                "failure_modes": c.failure_modes,
            }
            for c in template.checks
        ],
    }


def template_from_dict(raw: dict) -> ChecklistTemplate:
    checks = []
    seen = set()
    for row in raw.get("checks", []):
        check = ChecklistCheck(
            check_id=str(row["check_id"]),
            title=str(row.get("title", row["check_id"])),
            what_to_verify=str(row.get("what_to_verify", "")),
            failure_modes=str(row.get("failure_modes", "")),
        )
        if check.check_id in seen:
            raise ValueError(f"duplicate check_id: {check.check_id}")
        seen.add(check.check_id)
        checks.append(check)
    if not checks:
        raise ValueError("checklist must define at least one check")
    return ChecklistTemplate(domain=str(raw["domain"]), checks=tuple(checks))


def install_templates(directory: Path) -> list[Path]:
    """Write the bundled templates as editable YAML files; returns paths."""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for domain, template in sorted(BUNDLED_TEMPLATES.items()):
        path = directory / f"checklist_{domain}.yaml"
        with path.open("w", encoding="utf-8") as handle:
            yaml.safe_dump(template_to_dict(template), handle, sort_keys=False, allow_unicode=True)
        written.append(path)
    return written


def load_templates(directory: Path) -> dict[str, ChecklistTemplate]:
    """Load templates from a directory, falling back to bundled ones."""
    templates = dict(BUNDLED_TEMPLATES)
    if directory.is_dir():
        for path in sorted(directory.glob("checklist_*.yaml")):
            with path.open("r", encoding="utf-8") as handle:
                raw = yaml.safe_load(handle)
            template = template_from_dict(raw)
            templates[template.domain] = template
    return templates
