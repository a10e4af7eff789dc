// Wire types for the governance service's JSON API. Field names follow
// the service responses exactly; nothing in here is computed locally.

export type TierWire =
  | "ai_restricted"
  | "tier1_pilot"
  | "tier1"
  | "tier2"
  | "tier3"
  | "tier4";

export type AxisLevel = "low" | "medium" | "high";
export type CapabilityRating = "unproven" | "emerging" | "established" | "mature";
export type ItemStatus = "planned" | "in_progress" | "validating" | "done";
export type DetectionPoint = "review" | "sampling" | "integration" | "post_delivery";

export interface Assessment {
  structuredness: AxisLevel;
  verifiability: AxisLevel;
  consequence: AxisLevel;
  capability: CapabilityRating;
}

export interface RegistryEventWire {
  event_id: number;
  timestamp: string;
  actor: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface HealthResponse {
  status: string;
  schema_version: number;
  last_event_id: number;
  current_cycle: number;
}

export interface EventsResponse {
  events: RegistryEventWire[];
  last_event_id: number;
}

export interface BoardTaskType {
  name: string;
  tier: TierWire | null;
  rating: CapabilityRating;
  sampling_rate: number;
  last_human_only_cycle: number | null;
}

export interface ViolationWire {
  event_id: number;
  note: string;
  person: string | null;
  task_type_id: string | null;
  item_id: string | null;
  cycle: number;
  recorded_by: string;
}

export interface BoardResponse {
  current_cycle: number;
  task_types: Record<string, BoardTaskType>;
  violations: ViolationWire[];
  open_demotion_prompts: Record<string, unknown>[];
}

export interface ProvenanceWire {
  producer: string;
  tool: string;
  prompt_ref: string;
  generated_at: string;
  note: string;
}

export interface ItemWire {
  item_id: string;
  title: string;
  task_type_id: string;
  tier: TierWire | null;
  default_tier: TierWire | null;
  matched_rule: string;
  rationale: string;
  assessment: Assessment | null;
  owner: string | null;
  status: ItemStatus;
  baseline_points: number | null;
  classified_cycle: number | null;
  provenance: ProvenanceWire | null;
  integration_verified: boolean;
  deficiency_resolution: Record<string, unknown> | null;
  outcome_event_ids: number[];
}

export interface EstimateWire {
  specification: number;
  generation: number;
  validation: number;
  integration: number;
  total: number;
}

export interface DecisionWire {
  tier: TierWire;
  matched_rule: string;
  rationale: string;
}

export interface PreviewResponse {
  decision: DecisionWire;
  applied_tier: TierWire;
  estimate: EstimateWire | null;
}

export interface ClassifyResponse {
  event_id: number;
  decision: DecisionWire;
  applied_tier: TierWire;
}

export interface OutcomeResponse {
  events: { event_id: number; kind: string }[];
  task_type_tier: TierWire | null;
}

export interface TransitionWire {
  task_type_id: string;
  direction: "promotion" | "demotion";
  from_tier: TierWire;
  to_tier: TierWire;
  trigger: string;
  cycle: number;
  rationale: string;
  evidence_window: EvidenceCycleWire[];
}

export interface DemotionResponse {
  events: number[];
  transition: TransitionWire;
}

export interface EvidenceCycleWire {
  cycle_index: number;
  tier_during_cycle: TierWire;
  outputs_validated: number;
  outputs_with_major_or_critical: number;
  critical_count: number;
  sampled_fraction: number | null;
}

export interface EligibilityWire {
  task_type_id: string;
  current_tier: TierWire;
  target_tier: TierWire | null;
  eligible: boolean;
  blockers: string[];
  window: EvidenceCycleWire[];
}

export interface MetricsWire {
  task_type_id: string;
  cycle: number;
  outcomes_count: number;
  first_pass_rate: number | null;
  error_rate: number | null;
  critical_count: number;
  mean_review_minutes: number | null;
  detected_in_counts: Record<string, number>;
  empty: boolean;
}

export interface SuggestedItemWire {
  title: string;
  task_type_id: string;
  applied_tier: TierWire;
  rationale: string;
}

export interface ErosionStatusWire {
  task_type_id: string;
  tier: TierWire | null;
  baseline_cycle: number | null;
  cycles_since_human_only: number | null;
  flagged: boolean;
  suggested_item: SuggestedItemWire | null;
}

export interface ErosionResponse {
  task_types: ErosionStatusWire[];
}

export interface LintFindingWire {
  rule: string;
  subject: string;
  detail: string;
}

export interface LintResponse {
  findings: LintFindingWire[];
  count: number;
}

export interface RetroReportWire {
  cycle: number;
  metrics: MetricsWire[];
  breach_demotions: TransitionWire[];
  sampling_adjustments: Record<string, unknown>[];
  promotion_eligibility: EligibilityWire[];
  erosion: ErosionStatusWire[];
  events_appended: number[];
}

export interface BudgetWire {
  sprint_id: string;
  required_validation: number;
  available_capacity: number | null;
  feasible: boolean;
  hints: { action: string; item_id: string; validation_points: number }[];
}

export interface PlanItemWire {
  item_id: string;
  title: string;
  task_type_id: string;
  tier: TierWire | null;
  baseline_points: number;
  owner: string | null;
  status: string;
  estimate: EstimateWire | null;
}

export interface PlanWire {
  schema_version: number;
  sprint_id: string;
  cycle: number;
  team_validation_capacity: number | null;
  items: PlanItemWire[];
}

export interface PlanResponse {
  plan: PlanWire;
  budget: BudgetWire;
}

export interface CheckpointWire {
  at_minutes: number;
  note: string;
  missed: boolean;
}

export interface SessionWire {
  session_id: string;
  owner: string;
  opened_cycle: number;
  task_type_id: string | null;
  item_id: string | null;
  checkpoint_interval_minutes: number;
  attested_notes: boolean;
  checkpoints: CheckpointWire[];
  pivots: Record<string, unknown>[];
  counterarguments: { note: string; at_minutes: number | null }[];
  status: string;
  closed_at_minutes: number | null;
  summary: string;
  missed_checkpoints: number;
}

export interface SessionDetailResponse {
  session: SessionWire;
  timer: {
    last_checkpoint_at_minutes: number;
    next_checkpoint_at_minutes: number;
    checkpoint_due?: boolean;
  } | null;
}

export interface TaskTypeWire {
  task_type_id: string;
  name: string;
  domain: string;
  tier: TierWire | null;
  rating: CapabilityRating;
  assessment: Assessment | null;
  sampling: Record<string, unknown>;
  ledger: Record<string, unknown>;
  registered_cycle: number;
  last_human_only_cycle: number | null;
}

export const TIER_ORDER: readonly TierWire[] = [
  "ai_restricted",
  "tier1_pilot",
  "tier1",
  "tier2",
  "tier3",
  "tier4",
];

// collapses the two tier-1 shades the way the service does
export function tierNumber(tier: TierWire): number {
  switch (tier) {
    case "ai_restricted":
      return 0;
    case "tier1_pilot":
    case "tier1":
      return 1;
    case "tier2":
      return 2;
    case "tier3":
      return 3;
    case "tier4":
      return 4;
  }
}

export function tierLabel(tier: TierWire | null): string {
  if (tier === null) return "unclassified";
  switch (tier) {
    case "ai_restricted":
      return "AI-restricted";
    case "tier1_pilot":
      return "Tier 1 (pilot)";
    case "tier1":
      return "Tier 1";
    case "tier2":
      return "Tier 2";
    case "tier3":
      return "Tier 3";
    case "tier4":
      return "Tier 4";
  }
}
