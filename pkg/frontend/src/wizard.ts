// Classification wizard: walks the four assessment axes, previews the
// tier and its validation cost through the service, and only then lets
// the user commit. The wizard never decides a tier itself; every number
// and tier on screen is a service response.

import { ApiClient, ApiError } from "./api";
import { OfflineQueue } from "./offline";
import type {
  Assessment,
  AxisLevel,
  CapabilityRating,
  EstimateWire,
  PreviewResponse,
  TierWire,
} from "./types";
import { tierNumber } from "./types";

export interface AxisChoice {
  value: string;
  hint: string;
}

export interface AxisGuide {
  field: keyof Assessment;
  label: string;
  question: string;
  choices: AxisChoice[];
}

// Inline guidance shown next to each selector. Working definitions, not
// tooltips the user has to hunt for.
export const AXIS_GUIDE: AxisGuide[] = [
  {
    field: "structuredness",
    label: "Structuredness",
    question: "How well-defined is this work before anyone starts?",
    choices: [
      { value: "low", hint: "open-ended; the shape of the answer is part of the work" },
      { value: "medium", hint: "clear goal, several defensible approaches" },
      { value: "high", hint: "inputs, outputs, and constraints are all pinned down" },
    ],
  },
  {
    field: "verifiability",
    label: "Verifiability",
    question: "How cheaply can a human check an output is right?",
    choices: [
      { value: "low", hint: "checking is as hard as doing it yourself" },
      { value: "medium", hint: "review catches most problems at real cost" },
      { value: "high", hint: "fast mechanical or visual check settles it" },
    ],
  },
  {
    field: "consequence",
    label: "Consequence",
    question: "What happens if a defect ships?",
    choices: [
      { value: "low", hint: "annoyance; cheap to roll back" },
      { value: "medium", hint: "real rework or user-visible breakage" },
      { value: "high", hint: "data loss, money, safety, or trust" },
    ],
  },
  {
    field: "capability",
    label: "Demonstrated capability",
    question: "What has the AI actually shown on this kind of work?",
    choices: [
      { value: "unproven", hint: "no recorded track record here yet" },
      { value: "emerging", hint: "some wins, not yet consistent" },
      { value: "established", hint: "consistent quality across recorded cycles" },
      { value: "mature", hint: "long clean history, boundary cases included" },
    ],
  },
];

export interface ClassificationDraft {
  itemId: string;
  title: string;
  taskTypeId: string;
  cycle: number | null;
  assessment: Partial<Assessment>;
  owner: string | null;
  baselinePoints: number | null;
  // set only when the team overrides the matrix default
  appliedTier: TierWire | null;
  rationale: string;
  // tests pin this; the live UI leaves it to the service clock
  timestamp?: string;
}

export function emptyDraft(): ClassificationDraft {
  return {
    itemId: "",
    title: "",
    taskTypeId: "",
    cycle: null,
    assessment: {},
    owner: null,
    baselinePoints: null,
    appliedTier: null,
    rationale: "",
  };
}

export function assessmentComplete(
  assessment: Partial<Assessment>,
): assessment is Assessment {
  return Boolean(
    assessment.structuredness &&
      assessment.verifiability &&
      assessment.consequence &&
      assessment.capability,
  );
}

/** Names of the fields still blocking a preview request. */
export function missingForPreview(draft: ClassificationDraft): string[] {
  const missing: string[] = [];
  for (const guide of AXIS_GUIDE) {
    if (!draft.assessment[guide.field]) missing.push(guide.field);
  }
  return missing;
}

/** Names of the fields still blocking a commit. */
export function missingForSubmit(
  draft: ClassificationDraft,
  previewedTier: TierWire | null,
): string[] {
  const missing = missingForPreview(draft);
  if (!draft.itemId) missing.push("item id");
  if (!draft.title) missing.push("title");
  if (!draft.taskTypeId) missing.push("task type");
  if (draft.cycle === null) missing.push("cycle");
  if (previewedTier === null) {
    missing.push("preview");
  } else if (ownerRequired(previewedTier) && !draft.owner) {
    missing.push("owner");
  }
  return missing;
}

/** Delegated work needs a named human; tier 1 and below does not force one. */
export function ownerRequired(tier: TierWire): boolean {
  return tierNumber(tier) >= 2;
}

/** The exact request body the service expects; optional fields are
 * omitted, not nulled, so the resulting registry event matches what the
 * CLI would have appended. */
export function buildClassificationPayload(
  draft: ClassificationDraft,
): Record<string, unknown> {
  if (!assessmentComplete(draft.assessment) || draft.cycle === null) {
    throw new Error("classification draft is incomplete");
  }
  const payload: Record<string, unknown> = {
    item_id: draft.itemId,
    title: draft.title,
    task_type_id: draft.taskTypeId,
    cycle: draft.cycle,
    assessment: {
      structuredness: draft.assessment.structuredness,
      verifiability: draft.assessment.verifiability,
      consequence: draft.assessment.consequence,
      capability: draft.assessment.capability,
    },
  };
  if (draft.owner) payload.owner = draft.owner;
  if (draft.baselinePoints !== null) payload.baseline_points = draft.baselinePoints;
  if (draft.appliedTier) payload.applied_tier = draft.appliedTier;
  if (draft.rationale) payload.rationale = draft.rationale;
  if (draft.timestamp) payload.timestamp = draft.timestamp;
  return payload;
}

export interface WhatIfState {
  tier: TierWire;
  estimate: EstimateWire | null;
}

function draftLabel(draft: ClassificationDraft): string {
  return draft.itemId || draft.title || "unnamed item";
}

export type SubmitResult =
  | { committed: true; eventId: number; appliedTier: TierWire }
  | { committed: false; queued: true; warning: string };

/** Wizard state machine. Preview before commit is mandatory: submit is
 * blocked until the current draft has been previewed, and any edit
 * invalidates the preview. */
export class WizardModel {
  draft: ClassificationDraft = emptyDraft();
  preview: PreviewResponse | null = null;
  whatIf: WhatIfState | null = null;
  private previewKey: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly offline?: OfflineQueue,
  ) {}

  update(patch: Partial<ClassificationDraft>): void {
    this.draft = { ...this.draft, ...patch };
    if (this.currentKey() !== this.previewKey) {
      this.preview = null;
      this.whatIf = null;
      this.previewKey = null;
    }
  }

  setAxis(field: keyof Assessment, value: AxisLevel | CapabilityRating): void {
    this.update({ assessment: { ...this.draft.assessment, [field]: value } });
  }

  private currentKey(): string {
    const a = this.draft.assessment;
    return [
      a.structuredness,
      a.verifiability,
      a.consequence,
      a.capability,
      this.draft.baselinePoints,
      this.draft.appliedTier,
      this.draft.taskTypeId,
    ].join("|");
  }

  /** The tier the commit would apply: the override if set, else the
   * service's previewed default. */
  appliedTier(): TierWire | null {
    return this.draft.appliedTier ?? this.preview?.decision.tier ?? null;
  }

  async refreshPreview(): Promise<PreviewResponse> {
    const a = this.draft.assessment;
    if (!assessmentComplete(a)) {
      throw new Error(`assessment incomplete: ${missingForPreview(this.draft).join(", ")}`);
    }
    const preview = await this.api.previewClassification({
      structuredness: a.structuredness,
      verifiability: a.verifiability,
      consequence: a.consequence,
      capability: a.capability,
      baseline_points: this.draft.baselinePoints ?? undefined,
      tier: this.draft.appliedTier ?? undefined,
      task_type_id: this.draft.taskTypeId || undefined,
    });
    this.preview = preview;
    this.previewKey = this.currentKey();
    this.whatIf = null;
    return preview;
  }

  /** Budget what-if at another tier. Fetches the service estimate for
   * that tier; the committed draft is untouched. */
  async toggleWhatIf(tier: TierWire): Promise<WhatIfState> {
    if (this.whatIf?.tier === tier) {
      this.whatIf = null;
      return { tier, estimate: null };
    }
    const a = this.draft.assessment;
    if (!assessmentComplete(a)) throw new Error("assessment incomplete");
    const preview = await this.api.previewClassification({
      structuredness: a.structuredness,
      verifiability: a.verifiability,
      consequence: a.consequence,
      capability: a.capability,
      baseline_points: this.draft.baselinePoints ?? undefined,
      tier,
      task_type_id: this.draft.taskTypeId || undefined,
    });
    this.whatIf = { tier, estimate: preview.estimate };
    return this.whatIf;
  }

  blockers(): string[] {
    return missingForSubmit(this.draft, this.appliedTier());
  }

  async submit(): Promise<SubmitResult> {
    const blockers = this.blockers();
    if (blockers.length > 0) {
      throw new Error(`not ready to submit: ${blockers.join(", ")}`);
    }
    const payload = buildClassificationPayload(this.draft);
    try {
      const response = await this.api.postClassification(payload);
      this.draft = emptyDraft();
      this.preview = null;
      this.whatIf = null;
      this.previewKey = null;
      return {
        committed: true,
        eventId: response.event_id,
        appliedTier: response.applied_tier,
      };
    } catch (err) {
      if (err instanceof ApiError && err.status === 0 && this.offline) {
        this.offline.enqueue(
          "/api/classifications",
          payload,
          `classification of ${draftLabel(this.draft)}`,
        );
        return {
          committed: false,
          queued: true,
          warning: "service unreachable; classification queued locally",
        };
      }
      throw err;
    }
  }
}
