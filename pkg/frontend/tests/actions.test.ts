import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api";
import {
  DemoteAction,
  buildDemotionPayload,
  buildOutcomePayload,
  demoteDisabledReason,
  emptyOutcomeDraft,
  outcomeBlockers,
  recordOutcome,
} from "../src/actions";
import { fakeFetch } from "./helpers";

describe("outcome drafts", () => {
  it("needs an item, a cycle, and a description on every finding", () => {
    const draft = emptyOutcomeDraft();
    expect(outcomeBlockers(draft)).toEqual(["item", "cycle"]);
    draft.itemId = "it-1";
    draft.cycle = 9;
    draft.findings.push({ severity: "major", description: "" });
    expect(outcomeBlockers(draft)).toEqual(["finding 1 description"]);
  });

  it("builds the exact service body, omitting what was not given", () => {
    const draft = emptyOutcomeDraft("it-1");
    draft.cycle = 9;
    draft.firstPass = false;
    draft.findings.push({ severity: "major", description: "edge case missed" });
    expect(buildOutcomePayload(draft)).toEqual({
      item_id: "it-1",
      cycle: 9,
      detected_in: "review",
      first_pass_accept: false,
      findings: [{ severity: "major", description: "edge case missed" }],
    });

    draft.reviewMinutes = 45.5;
    draft.reviewer = "dev2";
    draft.timestamp = "2026-08-01T10:00:00Z";
    const payload = buildOutcomePayload(draft);
    expect(payload.review_minutes).toBe(45.5);
    expect(payload.reviewer).toBe("dev2");
  });

  it("posts through the client and returns the service's event list", async () => {
    const api = new ApiClient({
      baseUrl: "http://fake",
      actor: "dev1",
      fetchFn: fakeFetch({
        "POST /api/outcomes": () => ({
          status: 201,
          json: {
            events: [{ event_id: 61, kind: "outcome_recorded" }],
            task_type_tier: "tier3",
          },
        }),
      }),
    });
    const draft = emptyOutcomeDraft("it-1");
    draft.cycle = 9;
    const response = await recordOutcome(api, draft);
    expect(response.events[0].kind).toBe("outcome_recorded");
    expect(response.task_type_tier).toBe("tier3");
  });
});

describe("demote control", () => {
  it("is disabled at tier 1 and below, with a reason to show as tooltip", () => {
    expect(demoteDisabledReason("tier3")).toBeNull();
    expect(demoteDisabledReason("tier2")).toBeNull();
    expect(demoteDisabledReason("tier1")).toMatch(/floor/);
    expect(demoteDisabledReason("tier1_pilot")).toMatch(/floor/);
    expect(demoteDisabledReason("ai_restricted")).toMatch(/floor/);
    expect(demoteDisabledReason(null)).toMatch(/classify/);
  });

  it("carries the tier the user saw, so the service can refuse stale clicks", () => {
    expect(
      buildDemotionPayload({
        taskTypeId: "unit_tests",
        cycle: 9,
        rationale: "quality slid",
        expectedTier: "tier3",
      }),
    ).toEqual({
      task_type_id: "unit_tests",
      cycle: 9,
      rationale: "quality slid",
      expected_tier: "tier3",
    });
  });

  it("arm() is one confirmation, confirm() posts, no approval chain", async () => {
    const writes: { key: string; body: unknown; url: URL }[] = [];
    const api = new ApiClient({
      baseUrl: "http://fake",
      actor: "dev2",
      fetchFn: fakeFetch(
        {
          "POST /api/transitions/demotions": () => ({
            json: {
              events: [61],
              transition: {
                task_type_id: "unit_tests",
                direction: "demotion",
                from_tier: "tier3",
                to_tier: "tier2",
                trigger: "member_request",
                cycle: 9,
                rationale: "quality slid",
                evidence_window: [],
              },
            },
          }),
        },
        writes,
      ),
    });
    const action = new DemoteAction(api);
    const prompt = action.arm({
      taskTypeId: "unit_tests",
      cycle: 9,
      rationale: "quality slid",
      expectedTier: "tier3",
    });
    expect(prompt).toMatch(/Demote unit_tests from Tier 3/);

    const result = await action.confirm();
    expect(result.applied).toBe(true);
    if (result.applied) {
      expect(result.response.transition.to_tier).toBe("tier2");
    }
    // exactly one write, no approval round-trips
    expect(writes).toHaveLength(1);
  });

  it("refuses to arm at tier 1", () => {
    const api = new ApiClient({ baseUrl: "http://fake", actor: "dev2", fetchFn: fakeFetch({}) });
    const action = new DemoteAction(api);
    expect(() =>
      action.arm({ taskTypeId: "docs", cycle: 9, rationale: "", expectedTier: "tier1" }),
    ).toThrow(/floor/);
  });

  it("a stale click surfaces the already-demoted state instead of stacking", async () => {
    const api = new ApiClient({
      baseUrl: "http://fake",
      actor: "dev2",
      fetchFn: fakeFetch({
        "POST /api/transitions/demotions": () => ({
          status: 409,
          json: { error: "tier is tier2, not tier3; someone got there first", current_tier: "tier2" },
        }),
      }),
    });
    const action = new DemoteAction(api);
    action.arm({ taskTypeId: "unit_tests", cycle: 9, rationale: "", expectedTier: "tier3" });
    const result = await action.confirm();
    expect(result.applied).toBe(false);
    if (!result.applied) {
      expect(result.alreadyDemoted).toBe(true);
      expect(result.currentTier).toBe("tier2");
    }
  });
});
