import { afterEach, beforeEach, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api";
import { RETRO_QUESTIONS, RetroModel, evidenceSummary, formatRate } from "../src/retro";
import type { EligibilityWire, MetricsWire } from "../src/types";
import { StubService, startStub } from "./helpers";

function metricsFor(taskTypeId: string, overrides: Partial<MetricsWire> = {}): MetricsWire {
  return {
    task_type_id: taskTypeId,
    cycle: 8,
    outcomes_count: 3,
    first_pass_rate: 2 / 3,
    error_rate: 1 / 3,
    critical_count: 0,
    mean_review_minutes: 40,
    detected_in_counts: { review: 3 },
    empty: false,
    ...overrides,
  };
}

const eligibilityApi: EligibilityWire = {
  task_type_id: "api_endpoints",
  current_tier: "tier3",
  target_tier: "tier4",
  eligible: false,
  blockers: ["needs 8 clean cycles at tier3; has 2"],
  window: [
    {
      cycle_index: 8,
      tier_during_cycle: "tier3",
      outputs_validated: 3,
      outputs_with_major_or_critical: 1,
      critical_count: 0,
      sampled_fraction: 0.25,
    },
  ],
};

function wireStub(stub: StubService, options: { currentCycle?: number } = {}): void {
  stub.respond("GET", "/api/board", () => ({
    json: {
      current_cycle: options.currentCycle ?? 9,
      task_types: {
        api_endpoints: {
          name: "REST API endpoints",
          tier: "tier3",
          rating: "established",
          sampling_rate: 0.25,
          last_human_only_cycle: null,
        },
        legacy_migrations: {
          name: "Schema migrations",
          tier: "ai_restricted",
          rating: "unproven",
          sampling_rate: 0.2,
          last_human_only_cycle: 8,
        },
      },
      violations: [],
      open_demotion_prompts: [],
    },
  }));
  stub.respond("GET", "/api/task-types/api_endpoints/metrics", () => ({
    json: metricsFor("api_endpoints"),
  }));
  stub.respond("GET", "/api/task-types/legacy_migrations/metrics", () => ({
    json: metricsFor("legacy_migrations", {
      outcomes_count: 0,
      first_pass_rate: null,
      error_rate: null,
      mean_review_minutes: null,
      detected_in_counts: {},
      empty: true,
    }),
  }));
  stub.respond("GET", "/api/task-types/api_endpoints/eligibility", () => ({
    json: eligibilityApi,
  }));
  stub.respond("GET", "/api/erosion", () => ({
    json: {
      task_types: [
        {
          task_type_id: "api_endpoints",
          tier: "tier3",
          baseline_cycle: 1,
          cycles_since_human_only: 8,
          flagged: true,
          suggested_item: {
            title: "Human-only cycle: REST API endpoints",
            task_type_id: "api_endpoints",
            applied_tier: "ai_restricted",
            rationale: "8 cycles since humans last executed this work; scheduled to keep validation skills current",
          },
        },
      ],
    },
  }));
  stub.respond("GET", "/api/lint", () => ({
    json: { findings: [{ rule: "tier_inflation", subject: "api_endpoints", detail: "..." }], count: 1 },
  }));
}

describe("retro view model", () => {
  let stub: StubService;
  let retro: RetroModel;

  beforeEach(async () => {
    stub = await startStub();
    wireStub(stub);
    retro = new RetroModel(new ApiClient({ baseUrl: stub.url, actor: "sam" }));
  });

  afterEach(async () => {
    await stub.close();
  });

  it("assembles closed-cycle panels from the read endpoints only", async () => {
    const data = await retro.load(8);
    expect(data.openCycle).toBe(false);
    // the untouched type's empty metrics row is filtered out
    expect(data.metrics.map((m) => m.task_type_id)).toEqual(["api_endpoints"]);
    // the AI-restricted type has no promotion question to ask
    expect(data.eligibility.map((e) => e.task_type_id)).toEqual(["api_endpoints"]);
    expect(data.erosion[0].flagged).toBe(true);
    expect(data.lint).toHaveLength(1);
    // assembling the view appended nothing
    expect(stub.writes).toHaveLength(0);
  });

  it("shows the two-of-three first-pass rate as 67%", async () => {
    const data = await retro.load(8);
    expect(formatRate(data.metrics[0].first_pass_rate)).toBe("67%");
  });

  it("treats the current cycle as open: read-only preview, run refused", async () => {
    const data = await retro.load(9);
    expect(data.openCycle).toBe(true);
    await expect(retro.run()).rejects.toThrow(/still open/);
    expect(stub.writes).toHaveLength(0);
  });

  it("running the ceremony posts once and folds the report in", async () => {
    stub.respond("POST", "/api/retro", (body) => ({
      json: {
        cycle: (body as Record<string, unknown>).cycle,
        metrics: [metricsFor("api_endpoints")],
        breach_demotions: [],
        sampling_adjustments: [
          { task_type_id: "api_endpoints", cycle: 8, old_rate: 0.15, new_rate: 0.25, basis: "integration_escape", reason: "1 escape" },
        ],
        promotion_eligibility: [eligibilityApi],
        erosion: [],
        events_appended: [61],
      },
    }));
    await retro.load(8);
    const report = await retro.run(true);
    expect(report.events_appended).toEqual([61]);
    expect(stub.writes).toEqual([
      {
        method: "POST",
        path: "/api/retro",
        body: { cycle: 8, capacity_confirmed: true },
        actor: "sam",
      },
    ]);
    expect(retro.data?.report?.sampling_adjustments).toHaveLength(1);
  });

  it("one click schedules the suggested human-only item, AI-restricted", async () => {
    stub.respond("GET", "/api/task-types/api_endpoints", () => ({
      json: {
        task_type_id: "api_endpoints",
        name: "REST API endpoints",
        domain: "code",
        tier: "tier3",
        rating: "established",
        assessment: {
          structuredness: "high",
          verifiability: "high",
          consequence: "medium",
          capability: "established",
        },
        sampling: {},
        ledger: {},
        registered_cycle: 1,
        last_human_only_cycle: null,
      },
    }));
    stub.respond("POST", "/api/classifications", () => ({
      status: 201,
      json: {
        event_id: 62,
        decision: { tier: "tier2", matched_rule: "explicit", rationale: "" },
        applied_tier: "ai_restricted",
      },
    }));

    const data = await retro.load(8);
    const result = await retro.scheduleHumanOnly(data.erosion[0], { owner: "dev1" });
    expect(result.appliedTier).toBe("ai_restricted");
    expect(result.itemId).toBe("human-only-api_endpoints-c9");

    const write = stub.writes.find((w) => w.path === "/api/classifications");
    expect(write?.body).toEqual({
      item_id: "human-only-api_endpoints-c9",
      title: "Human-only cycle: REST API endpoints",
      task_type_id: "api_endpoints",
      cycle: 9,
      assessment: {
        structuredness: "high",
        verifiability: "high",
        consequence: "medium",
        capability: "established",
      },
      owner: "dev1",
      applied_tier: "ai_restricted",
      rationale: "8 cycles since humans last executed this work; scheduled to keep validation skills current",
    });
  });

  it("refuses the one-click on an unflagged type", async () => {
    const data = await retro.load(8);
    const unflagged = { ...data.erosion[0], flagged: false, suggested_item: null };
    await expect(retro.scheduleHumanOnly(unflagged, { owner: "dev1" })).rejects.toThrow(
      /not flagged/,
    );
  });

  it("walks the four questions as a completable checklist", () => {
    expect(RETRO_QUESTIONS.map((q) => q.prompt)).toEqual([
      "Were tier assignments accurate?",
      "Was validation effort correctly estimated?",
      "Were there quality surprises?",
      "Any competence erosion signals?",
    ]);
    expect(retro.checklistComplete()).toBe(false);
    for (const question of RETRO_QUESTIONS) {
      retro.setChecklist(question.id, { done: true, note: "discussed" });
    }
    expect(retro.checklistComplete()).toBe(true);
    expect(retro.checklist[0].note).toBe("discussed");
  });

  it("reports an empty cycle so the view can show guidance instead of blanks", async () => {
    stub.respond("GET", "/api/task-types/api_endpoints/metrics", () => ({
      json: metricsFor("api_endpoints", {
        outcomes_count: 0,
        first_pass_rate: null,
        error_rate: null,
        mean_review_minutes: null,
        detected_in_counts: {},
        empty: true,
      }),
    }));
    await retro.load(8);
    expect(retro.isEmpty()).toBe(true);
  });

  it("renders the evidence window in plain words", () => {
    const lines = evidenceSummary(eligibilityApi);
    expect(lines).toHaveLength(1);
    expect(lines[0]).toContain("cycle 8 at tier 3");
    expect(lines[0]).toContain("3 validated");
    expect(lines[0]).toContain("sampled 25%");
  });
});
