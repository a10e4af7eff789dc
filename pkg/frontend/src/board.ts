// Board state: columns of item cards plus the per-type tier rows and
// the validation-budget gauge. The store folds registry events by
// copying fields the event carries verbatim (a demotion's to_tier, a
// violation's note); anything the server derives (capability ratings,
// budgets) is refetched instead of recomputed here.

import { ApiClient } from "./api";
import type {
  BoardTaskType,
  BudgetWire,
  ItemStatus,
  ItemWire,
  RegistryEventWire,
  TierWire,
  ViolationWire,
} from "./types";
import { tierLabel } from "./types";

export interface BoardState {
  currentCycle: number;
  taskTypes: Record<string, BoardTaskType>;
  items: Record<string, ItemWire>;
  violations: ViolationWire[];
}

export interface CardView {
  itemId: string;
  title: string;
  status: ItemStatus;
  tier: TierWire | null;
  tierBadge: string;
  owner: string | null;
  pilot: boolean;
  aiRestricted: boolean;
  violated: boolean;
  taskTypeId: string;
  taskTypeName: string;
}

export interface ColumnView {
  status: ItemStatus;
  title: string;
  cards: CardView[];
}

const COLUMN_TITLES: Record<ItemStatus, string> = {
  planned: "Planned",
  in_progress: "In progress",
  validating: "Validating",
  done: "Done",
};

const COLUMN_ORDER: ItemStatus[] = ["planned", "in_progress", "validating", "done"];

// events whose effects on derived state (ratings, eligibility, budget)
// the server must recompute; seeing one marks the snapshot stale
const DERIVED_AFFECTING = new Set([
  "outcome_recorded",
  "rating_downgraded",
  "transition_applied",
  "human_only_cycle_completed",
]);

export class BoardStore {
  state: BoardState | null = null;
  stale = false;
  lastEventId = 0;

  constructor(private readonly api: ApiClient) {}

  /** Full snapshot load. The event cursor is taken from the service
   * before the snapshot is read, so events landing in between get
   * replayed onto it; every fold is an idempotent field copy, so the
   * overlap is harmless. */
  async load(): Promise<BoardState> {
    const health = await this.api.health();
    const [board, items] = await Promise.all([this.api.board(), this.api.items()]);
    this.state = {
      currentCycle: board.current_cycle,
      taskTypes: board.task_types,
      items: items.items,
      violations: board.violations,
    };
    this.lastEventId = health.last_event_id;
    this.stale = false;
    return this.state;
  }

  /** Fold one event into the snapshot. Only verbatim payload fields are
   * copied; returns true when something visible changed. */
  applyEvent(event: RegistryEventWire): boolean {
    if (!this.state) return false;
    if (event.event_id <= this.lastEventId) return false;
    this.lastEventId = event.event_id;
    const payload = event.payload;
    let changed = false;

    switch (event.kind) {
      case "transition_applied": {
        const taskType = this.state.taskTypes[payload.task_type_id as string];
        if (taskType) {
          taskType.tier = payload.to_tier as TierWire;
          changed = true;
        }
        break;
      }
      case "violation_noted": {
        this.state.violations.push({
          event_id: event.event_id,
          note: (payload.note as string) ?? "",
          person: (payload.person as string) ?? null,
          task_type_id: (payload.task_type_id as string) ?? null,
          item_id: (payload.item_id as string) ?? null,
          cycle: payload.cycle as number,
          recorded_by: event.actor,
        });
        changed = true;
        break;
      }
      case "item_classified": {
        const itemId = payload.item_id as string;
        const existing = this.state.items[itemId];
        this.state.items[itemId] = {
          item_id: itemId,
          title: (payload.title as string) ?? existing?.title ?? "",
          task_type_id: (payload.task_type_id as string) ?? "",
          tier: (payload.applied_tier as TierWire) ?? null,
          default_tier: (payload.default_tier as TierWire) ?? null,
          matched_rule: (payload.matched_rule as string) ?? "",
          rationale: (payload.rationale as string) ?? "",
          assessment: (payload.assessment as ItemWire["assessment"]) ?? null,
          owner: (payload.owner as string) ?? existing?.owner ?? null,
          status: existing?.status ?? "planned",
          baseline_points: (payload.baseline_points as number) ?? null,
          classified_cycle: payload.cycle as number,
          provenance: existing?.provenance ?? null,
          integration_verified: existing?.integration_verified ?? false,
          deficiency_resolution: existing?.deficiency_resolution ?? null,
          outcome_event_ids: existing?.outcome_event_ids ?? [],
        };
        changed = true;
        break;
      }
      case "item_status_changed": {
        const item = this.state.items[payload.item_id as string];
        if (item) {
          item.status = payload.status as ItemStatus;
          changed = true;
        }
        break;
      }
      case "sampling_adjusted": {
        const taskType = this.state.taskTypes[payload.task_type_id as string];
        if (taskType) {
          taskType.sampling_rate = payload.new_rate as number;
          changed = true;
        }
        break;
      }
      case "rating_downgraded": {
        const taskType = this.state.taskTypes[payload.task_type_id as string];
        if (taskType) {
          taskType.rating = payload.new_rating as BoardTaskType["rating"];
          changed = true;
        }
        break;
      }
      case "outcome_recorded": {
        const item = this.state.items[payload.item_id as string];
        if (item) {
          item.outcome_event_ids.push(event.event_id);
          changed = true;
        }
        break;
      }
      case "human_only_cycle_completed": {
        const taskType = this.state.taskTypes[payload.task_type_id as string];
        if (taskType) {
          taskType.last_human_only_cycle = payload.cycle as number;
          changed = true;
        }
        break;
      }
      default:
        break;
    }

    if (DERIVED_AFFECTING.has(event.kind)) this.stale = true;
    return changed;
  }

  /** Cards grouped into status columns. Every card carries its tier
   * badge; the violation flag is part of the card itself, so there is
   * no rendering path without it. */
  columns(): ColumnView[] {
    if (!this.state) return [];
    const state = this.state;
    const violatedItems = new Set(
      state.violations.map((v) => v.item_id).filter((id): id is string => Boolean(id)),
    );
    const violatedTypes = new Set(
      state.violations
        .filter((v) => !v.item_id)
        .map((v) => v.task_type_id)
        .filter((id): id is string => Boolean(id)),
    );
    const columns: ColumnView[] = COLUMN_ORDER.map((status) => ({
      status,
      title: COLUMN_TITLES[status],
      cards: [],
    }));
    const byStatus = new Map(columns.map((c) => [c.status, c]));
    const items = Object.values(state.items).sort((a, b) =>
      a.item_id.localeCompare(b.item_id),
    );
    for (const item of items) {
      const card: CardView = {
        itemId: item.item_id,
        title: item.title,
        status: item.status,
        tier: item.tier,
        tierBadge: tierLabel(item.tier),
        owner: item.owner,
        pilot: item.tier === "tier1_pilot",
        aiRestricted: item.tier === "ai_restricted",
        violated:
          violatedItems.has(item.item_id) || violatedTypes.has(item.task_type_id),
        taskTypeId: item.task_type_id,
        taskTypeName: state.taskTypes[item.task_type_id]?.name ?? item.task_type_id,
      };
      byStatus.get(item.status)?.cards.push(card);
    }
    return columns;
  }

  /** Validation-budget gauge for a set of items at a given capacity.
   * The numbers come back from the service's budgeting, not from any
   * local arithmetic. */
  async gauge(
    itemIds: string[],
    capacity: number | undefined,
    sprintId = "board",
  ): Promise<BudgetWire> {
    const cycle = this.state?.currentCycle ?? 0;
    const response = await this.api.buildPlan({
      sprint_id: sprintId,
      cycle,
      item_ids: itemIds,
      team_validation_capacity: capacity,
    });
    return response.budget;
  }
}
