import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api";
import { OfflineQueue } from "../src/offline";
import {
  WizardModel,
  buildClassificationPayload,
  emptyDraft,
  missingForSubmit,
  ownerRequired,
} from "../src/wizard";
import type { PreviewResponse } from "../src/types";
import { fakeFetch } from "./helpers";

const previewTier2: PreviewResponse = {
  decision: { tier: "tier2", matched_rule: "explicit", rationale: "matrix row" },
  applied_tier: "tier2",
  estimate: { specification: 1.6, generation: 0.4, validation: 3.2, integration: 0.8, total: 6 },
};

function clientWith(
  routes: Parameters<typeof fakeFetch>[0],
  log?: Parameters<typeof fakeFetch>[1],
): ApiClient {
  return new ApiClient({ baseUrl: "http://fake", actor: "dev1", fetchFn: fakeFetch(routes, log) });
}

function filledDraft() {
  return {
    ...emptyDraft(),
    itemId: "it-1",
    title: "Extract endpoint",
    taskTypeId: "api_endpoints",
    cycle: 9,
    baselinePoints: 8,
    assessment: {
      structuredness: "high" as const,
      verifiability: "high" as const,
      consequence: "medium" as const,
      capability: "established" as const,
    },
  };
}

describe("owner requirement", () => {
  it("tier 2 and up needs a named owner, tier 1 does not", () => {
    expect(ownerRequired("tier2")).toBe(true);
    expect(ownerRequired("tier4")).toBe(true);
    expect(ownerRequired("tier1")).toBe(false);
    expect(ownerRequired("tier1_pilot")).toBe(false);
    expect(ownerRequired("ai_restricted")).toBe(false);
  });

  it("blocks submission of a tier2 preview without an owner, inline", () => {
    const draft = filledDraft();
    expect(missingForSubmit(draft, "tier2")).toEqual(["owner"]);
    draft.owner = "dev2";
    expect(missingForSubmit(draft, "tier2")).toEqual([]);
  });

  it("never allows submit before a preview exists", () => {
    expect(missingForSubmit(filledDraft(), null)).toEqual(["preview"]);
  });
});

describe("payload building", () => {
  it("omits optional fields that were never set", () => {
    const payload = buildClassificationPayload({ ...filledDraft(), baselinePoints: null });
    expect(payload).toEqual({
      item_id: "it-1",
      title: "Extract endpoint",
      task_type_id: "api_endpoints",
      cycle: 9,
      assessment: {
        structuredness: "high",
        verifiability: "high",
        consequence: "medium",
        capability: "established",
      },
    });
    expect("owner" in payload).toBe(false);
    expect("applied_tier" in payload).toBe(false);
  });

  it("carries override tier and pinned timestamp when present", () => {
    const payload = buildClassificationPayload({
      ...filledDraft(),
      owner: "dev2",
      appliedTier: "tier1",
      rationale: "pilot first",
      timestamp: "2026-08-01T10:00:00Z",
    });
    expect(payload.applied_tier).toBe("tier1");
    expect(payload.owner).toBe("dev2");
    expect(payload.timestamp).toBe("2026-08-01T10:00:00Z");
    expect(payload.baseline_points).toBe(8);
  });
});

describe("preview lifecycle", () => {
  it("an assessment edit invalidates the preview; a title edit does not", async () => {
    const api = clientWith({
      "GET /api/preview/classification": () => ({ json: previewTier2 }),
    });
    const wizard = new WizardModel(api);
    wizard.update(filledDraft());
    await wizard.refreshPreview();
    expect(wizard.preview?.decision.tier).toBe("tier2");

    wizard.update({ title: "renamed" });
    expect(wizard.preview).not.toBeNull();

    wizard.setAxis("consequence", "high");
    expect(wizard.preview).toBeNull();
    expect(wizard.blockers()).toContain("preview");
  });

  it("what-if toggles fetch the service estimate at that tier and clear on re-toggle", async () => {
    const log: { key: string; body: unknown; url: URL }[] = [];
    const api = clientWith(
      {
        "GET /api/preview/classification": (_body, url) => {
          const tier = url.searchParams.get("tier");
          return {
            json: {
              ...previewTier2,
              applied_tier: tier ?? "tier2",
              estimate: { ...previewTier2.estimate, total: tier === "tier1" ? 9 : 6 },
            },
          };
        },
      },
      log,
    );
    const wizard = new WizardModel(api);
    wizard.update(filledDraft());
    await wizard.refreshPreview();

    const whatIf = await wizard.toggleWhatIf("tier1");
    expect(whatIf.estimate?.total).toBe(9);
    expect(log[log.length - 1].url.searchParams.get("tier")).toBe("tier1");

    const cleared = await wizard.toggleWhatIf("tier1");
    expect(cleared.estimate).toBeNull();
    expect(wizard.whatIf).toBeNull();
  });
});

describe("unreachable service", () => {
  it("queues the classification locally and says so", async () => {
    const offline = new OfflineQueue();
    const api = clientWith({
      "GET /api/preview/classification": () => ({ json: previewTier2 }),
      "POST /api/classifications": () => "unreachable",
    });
    const wizard = new WizardModel(api, offline);
    wizard.update({ ...filledDraft(), owner: "dev2" });
    await wizard.refreshPreview();

    const result = await wizard.submit();
    expect(result.committed).toBe(false);
    if (!result.committed) {
      expect(result.queued).toBe(true);
      expect(result.warning).toMatch(/unreachable/);
    }
    expect(offline.size).toBe(1);
    expect(offline.pending[0].path).toBe("/api/classifications");
    expect(offline.pending[0].body.item_id).toBe("it-1");
  });

  it("a queued write replays verbatim once the service is back", async () => {
    const offline = new OfflineQueue();
    offline.enqueue("/api/classifications", { item_id: "it-1", cycle: 9 }, "it-1");

    const posted: unknown[] = [];
    const report = await offline.flush(async (path, body) => {
      posted.push({ path, body });
    });
    expect(report.sent).toBe(1);
    expect(report.remaining).toBe(0);
    expect(posted).toEqual([
      { path: "/api/classifications", body: { item_id: "it-1", cycle: 9 } },
    ]);
  });
});

describe("successful submit", () => {
  it("posts the built payload and resets the draft", async () => {
    const log: { key: string; body: unknown; url: URL }[] = [];
    const api = clientWith(
      {
        "GET /api/preview/classification": () => ({ json: previewTier2 }),
        "POST /api/classifications": () => ({
          status: 201,
          json: { event_id: 61, decision: previewTier2.decision, applied_tier: "tier2" },
        }),
      },
      log,
    );
    const wizard = new WizardModel(api);
    wizard.update({ ...filledDraft(), owner: "dev2" });
    await wizard.refreshPreview();

    const result = await wizard.submit();
    expect(result).toEqual({ committed: true, eventId: 61, appliedTier: "tier2" });
    expect(wizard.draft.itemId).toBe("");
    expect(wizard.preview).toBeNull();

    const write = log.find((entry) => entry.key === "POST /api/classifications");
    expect((write?.body as Record<string, unknown>).owner).toBe("dev2");
  });
});
