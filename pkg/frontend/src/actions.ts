// Outcome recording and the demote control. Both build the exact
// request bodies the service expects; the registry events that result
// are the same ones the CLI would have produced.

import { ApiClient, ApiError } from "./api";
import type {
  DemotionResponse,
  DetectionPoint,
  OutcomeResponse,
  TierWire,
} from "./types";
import { tierNumber, tierLabel } from "./types";

export type FindingSeverity = "minor" | "major" | "critical";

export interface FindingDraft {
  severity: FindingSeverity;
  // what went wrong, e.g. "error_handling"; free text on the wire
  category: string;
  note: string;
}

export interface OutcomeDraft {
  itemId: string;
  cycle: number | null;
  detectedIn: DetectionPoint;
  firstPass: boolean;
  findings: FindingDraft[];
  checklistResults: Record<string, string> | null;
  reviewMinutes: number | null;
  // defaults to the acting user on the service side
  reviewer: string | null;
  timestamp?: string;
}

export function emptyOutcomeDraft(itemId = ""): OutcomeDraft {
  return {
    itemId,
    cycle: null,
    detectedIn: "review",
    firstPass: true,
    findings: [],
    checklistResults: null,
    reviewMinutes: null,
    reviewer: null,
  };
}

export function outcomeBlockers(draft: OutcomeDraft): string[] {
  const missing: string[] = [];
  if (!draft.itemId) missing.push("item");
  if (draft.cycle === null) missing.push("cycle");
  for (const [index, finding] of draft.findings.entries()) {
    if (!finding.category) missing.push(`finding ${index + 1} category`);
  }
  return missing;
}

export function buildOutcomePayload(draft: OutcomeDraft): Record<string, unknown> {
  if (draft.cycle === null) throw new Error("outcome draft needs a cycle");
  const payload: Record<string, unknown> = {
    item_id: draft.itemId,
    cycle: draft.cycle,
    detected_in: draft.detectedIn,
    first_pass_accept: draft.firstPass,
    findings: draft.findings.map((f) => ({
      severity: f.severity,
      description: f.description,
    })),
  };
  if (draft.reviewer) payload.reviewer = draft.reviewer;
  if (draft.checklistResults) payload.checklist_results = draft.checklistResults;
  if (draft.reviewMinutes !== null) payload.review_minutes = draft.reviewMinutes;
  if (draft.timestamp) payload.timestamp = draft.timestamp;
  return payload;
}

export async function recordOutcome(
  api: ApiClient,
  draft: OutcomeDraft,
): Promise<OutcomeResponse> {
  const blockers = outcomeBlockers(draft);
  if (blockers.length > 0) {
    throw new Error(`outcome incomplete: ${blockers.join(", ")}`);
  }
  return api.postOutcome(buildOutcomePayload(draft));
}

// -- demote control

export interface DemotionDraft {
  taskTypeId: string;
  cycle: number;
  rationale: string;
  // the tier the user saw when they clicked; lets the service reject a
  // stale click instead of stacking a second demotion
  expectedTier: TierWire | null;
  timestamp?: string;
}

export function buildDemotionPayload(draft: DemotionDraft): Record<string, unknown> {
  const payload: Record<string, unknown> = {
    task_type_id: draft.taskTypeId,
    cycle: draft.cycle,
  };
  if (draft.rationale) payload.rationale = draft.rationale;
  if (draft.expectedTier) payload.expected_tier = draft.expectedTier;
  if (draft.timestamp) payload.timestamp = draft.timestamp;
  return payload;
}

/** Why the demote control is disabled, or null when it is usable.
 * Demotion through the board stops at tier 1; taking a type fully out
 * of delegation is a classification decision, not a button. */
export function demoteDisabledReason(tier: TierWire | null): string | null {
  if (tier === null) return "no tier yet; classify an item first";
  if (tierNumber(tier) <= 1) {
    return `${tierLabel(tier)} is the floor for this control; restrict the type by classifying work as AI-restricted instead`;
  }
  return null;
}

export type DemoteResult =
  | { applied: true; response: DemotionResponse }
  | { applied: false; alreadyDemoted: true; currentTier: TierWire | null };

/** Two-step demote: arm() returns the confirmation prompt, confirm()
 * posts. One confirmation, no approval chain. */
export class DemoteAction {
  private armed: DemotionDraft | null = null;

  constructor(private readonly api: ApiClient) {}

  arm(draft: DemotionDraft): string {
    const reason = demoteDisabledReason(draft.expectedTier);
    if (reason) throw new Error(reason);
    this.armed = draft;
    return `Demote ${draft.taskTypeId} from ${tierLabel(draft.expectedTier)} now? Takes effect immediately.`;
  }

  cancel(): void {
    this.armed = null;
  }

  async confirm(): Promise<DemoteResult> {
    if (!this.armed) throw new Error("nothing armed; call arm() first");
    const draft = this.armed;
    this.armed = null;
    try {
      const response = await this.api.postDemotion(buildDemotionPayload(draft));
      return { applied: true, response };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        const currentTier = (err.body?.current_tier as TierWire | undefined) ?? null;
        return { applied: false, alreadyDemoted: true, currentTier };
      }
      throw err;
    }
  }
}
