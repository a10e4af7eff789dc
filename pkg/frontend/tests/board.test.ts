import { afterEach, beforeEach, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api";
import { BoardStore } from "../src/board";
import { EventFeed } from "../src/events";
import type { BoardResponse, ItemWire } from "../src/types";
import { StubService, startStub } from "./helpers";

function boardResponse(): BoardResponse {
  return {
    current_cycle: 9,
    task_types: {
      api_endpoints: {
        name: "REST API endpoints",
        tier: "tier3",
        rating: "established",
        sampling_rate: 0.25,
        last_human_only_cycle: null,
      },
      docs: {
        name: "Documentation",
        tier: "tier1",
        rating: "unproven",
        sampling_rate: 0.2,
        last_human_only_cycle: 3,
      },
    },
    violations: [],
    open_demotion_prompts: [],
  };
}

function item(id: string, overrides: Partial<ItemWire> = {}): ItemWire {
  return {
    item_id: id,
    title: `Item ${id}`,
    task_type_id: "api_endpoints",
    tier: "tier3",
    default_tier: "tier3",
    matched_rule: "explicit",
    rationale: "",
    assessment: null,
    owner: "dev1",
    status: "planned",
    baseline_points: 5,
    classified_cycle: 9,
    provenance: null,
    integration_verified: false,
    deficiency_resolution: null,
    outcome_event_ids: [],
    ...overrides,
  };
}

describe("board store", () => {
  let stub: StubService;
  let store: BoardStore;

  beforeEach(async () => {
    stub = await startStub();
    stub.respond("GET", "/api/board", () => ({ json: boardResponse() }));
    stub.respond("GET", "/api/items", () => ({
      json: { items: { "it-1": item("it-1"), "it-2": item("it-2", { status: "validating" }) } },
    }));
    store = new BoardStore(
      new ApiClient({ baseUrl: stub.url, actor: "dev1" }),
    );
    await store.load();
  });

  afterEach(async () => {
    await stub.close();
  });

  it("groups cards into status columns with the tier badge on every card", () => {
    const columns = store.columns();
    expect(columns.map((c) => c.status)).toEqual([
      "planned",
      "in_progress",
      "validating",
      "done",
    ]);
    const planned = columns[0];
    expect(planned.cards).toHaveLength(1);
    expect(planned.cards[0].tierBadge).toBe("Tier 3");
    const validating = columns[2];
    expect(validating.cards[0].itemId).toBe("it-2");
  });

  it("folds a demotion into the type's tier straight from the event payload", () => {
    const changed = store.applyEvent({
      event_id: stub.lastEventId + 1,
      timestamp: "t",
      actor: "dev2",
      kind: "transition_applied",
      payload: { task_type_id: "api_endpoints", to_tier: "tier2", direction: "demotion" },
    });
    expect(changed).toBe(true);
    expect(store.state?.taskTypes.api_endpoints.tier).toBe("tier2");
    // derived numbers (eligibility, ratings) may have moved server-side
    expect(store.stale).toBe(true);
  });

  it("ignores events at or before its cursor, so snapshot overlap is harmless", () => {
    const id = store.lastEventId;
    const applied = store.applyEvent({
      event_id: id,
      timestamp: "t",
      actor: "dev2",
      kind: "transition_applied",
      payload: { task_type_id: "api_endpoints", to_tier: "tier1" },
    });
    expect(applied).toBe(false);
    expect(store.state?.taskTypes.api_endpoints.tier).toBe("tier3");
  });

  it("marks cards violated from item-level and type-level violations alike", () => {
    store.applyEvent({
      event_id: store.lastEventId + 1,
      timestamp: "t",
      actor: "sam",
      kind: "violation_noted",
      payload: { note: "skipped the checklist", item_id: "it-2", task_type_id: null, cycle: 9 },
    });
    let cards = store.columns().flatMap((c) => c.cards);
    expect(cards.find((c) => c.itemId === "it-2")?.violated).toBe(true);
    expect(cards.find((c) => c.itemId === "it-1")?.violated).toBe(false);

    store.applyEvent({
      event_id: store.lastEventId + 1,
      timestamp: "t",
      actor: "sam",
      kind: "violation_noted",
      payload: { note: "merged unreviewed output", task_type_id: "api_endpoints", cycle: 9 },
    });
    cards = store.columns().flatMap((c) => c.cards);
    // a type-level violation marks every card of that type; there is no
    // card state that hides the flag
    expect(cards.every((c) => c.violated)).toBe(true);
  });

  it("upserts newly classified items and moves status changes", () => {
    store.applyEvent({
      event_id: store.lastEventId + 1,
      timestamp: "t",
      actor: "dev1",
      kind: "item_classified",
      payload: {
        item_id: "it-3",
        title: "New extraction",
        task_type_id: "docs",
        applied_tier: "tier1",
        default_tier: "tier1",
        matched_rule: "explicit",
        rationale: "",
        cycle: 9,
        owner: "dev2",
      },
    });
    store.applyEvent({
      event_id: store.lastEventId + 1,
      timestamp: "t",
      actor: "dev1",
      kind: "item_status_changed",
      payload: { item_id: "it-3", status: "in_progress" },
    });
    const inProgress = store.columns().find((c) => c.status === "in_progress");
    expect(inProgress?.cards.map((c) => c.itemId)).toEqual(["it-3"]);
    expect(inProgress?.cards[0].tierBadge).toBe("Tier 1");
  });
});

describe("live updates", () => {
  it("a demotion reaches the board well inside two seconds of append", async () => {
    const stub = await startStub();
    stub.respond("GET", "/api/board", () => ({ json: boardResponse() }));
    stub.respond("GET", "/api/items", () => ({ json: { items: { "it-1": item("it-1") } } }));
    const api = new ApiClient({ baseUrl: stub.url, actor: "dev1" });
    const store = new BoardStore(api);
    await store.load();

    let resolveSeen: () => void = () => {};
    const seen = new Promise<void>((resolve) => (resolveSeen = resolve));
    const feed = new EventFeed(api, store.lastEventId, {
      onEvents: (events) => {
        for (const event of events) store.applyEvent(event);
        resolveSeen();
      },
      waitSeconds: 5,
    });
    feed.start();
    // let the long-poll park before the event lands
    await new Promise((resolve) => setTimeout(resolve, 100));

    const appendedAt = Date.now();
    stub.appendEvent({
      kind: "transition_applied",
      actor: "dev2",
      payload: { task_type_id: "api_endpoints", to_tier: "tier2", direction: "demotion" },
    });
    await seen;
    const elapsed = Date.now() - appendedAt;

    expect(store.state?.taskTypes.api_endpoints.tier).toBe("tier2");
    expect(elapsed).toBeLessThan(2000);

    feed.stop();
    await stub.close();
  });
});
