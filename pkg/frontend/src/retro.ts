// Retro screen: the end-of-cycle review. Panels show cycle metrics,
// promotion eligibility with its evidence window, erosion flags with a
// one-click scheduling action, and lint findings; a guided checklist
// walks the four hybrid questions. Every number here is a service
// response; this module only fetches and arranges.

import { ApiClient, ApiError } from "./api";
import type {
  EligibilityWire,
  ErosionStatusWire,
  LintFindingWire,
  MetricsWire,
  RetroReportWire,
  TierWire,
} from "./types";
import { tierNumber } from "./types";
import { buildClassificationPayload } from "./wizard";

export interface RetroQuestion {
  id: string;
  prompt: string;
  // which panel on screen answers it
  guide: string;
}

export const RETRO_QUESTIONS: readonly RetroQuestion[] = [
  {
    id: "tier-accuracy",
    prompt: "Were tier assignments accurate?",
    guide:
      "Check first-pass rates and any breach demotions below; a type that kept failing review was over-delegated.",
  },
  {
    id: "validation-effort",
    prompt: "Was validation effort correctly estimated?",
    guide:
      "Compare mean review minutes against what planning budgeted; chronic overruns mean the estimates, not the reviewers, are off.",
  },
  {
    id: "quality-surprises",
    prompt: "Were there quality surprises?",
    guide:
      "Look at critical findings and where defects were detected; anything caught in integration or after delivery slipped past the tier's protocol.",
  },
  {
    id: "erosion-signals",
    prompt: "Any competence erosion signals?",
    guide:
      "Review the erosion panel; a flagged type has gone too long since humans last did the work themselves.",
  },
];

export interface ChecklistEntry {
  question: RetroQuestion;
  done: boolean;
  note: string;
}

export interface RetroData {
  cycle: number;
  currentCycle: number;
  // still open: panels render read-only, the ceremony cannot run
  openCycle: boolean;
  metrics: MetricsWire[];
  eligibility: EligibilityWire[];
  erosion: ErosionStatusWire[];
  lint: LintFindingWire[];
  // present once the ceremony ran for this cycle
  report: RetroReportWire | null;
}

/** "0.6666" -> "67%"; the rate itself came from the service. */
export function formatRate(rate: number | null): string {
  if (rate === null) return "n/a";
  return `${Math.round(rate * 100)}%`;
}

/** Shown when a cycle has no recorded outcomes at all. */
export const EMPTY_STATE_GUIDANCE =
  "No validation outcomes were recorded this cycle. Record findings as reviews " +
  "happen (Board screen, each card's outcome form); without outcomes there is " +
  "no evidence to promote, demote, or adjust sampling on.";

export interface ScheduleResult {
  eventId: number;
  itemId: string;
  appliedTier: TierWire;
}

export class RetroModel {
  data: RetroData | null = null;
  checklist: ChecklistEntry[] = RETRO_QUESTIONS.map((question) => ({
    question,
    done: false,
    note: "",
  }));

  constructor(private readonly api: ApiClient) {}

  /** Assemble the panels for a cycle from the read endpoints. Nothing
   * is appended; this is safe to call on every screen visit. Defaults
   * to the most recently closed cycle. */
  async load(cycle?: number): Promise<RetroData> {
    const board = await this.api.board();
    const current = board.current_cycle;
    const target = cycle ?? (current > 1 ? current - 1 : current);
    const typeIds = Object.keys(board.task_types).sort();

    const metrics = (
      await Promise.all(typeIds.map((id) => this.api.metrics(id, target)))
    ).filter((m) => !m.empty);

    // eligibility exists for delegated tiers that still have headroom;
    // mirror the service's retro by skipping the rest
    const candidates = typeIds.filter((id) => {
      const tier = board.task_types[id].tier;
      return tier !== null && tier !== "ai_restricted" && tier !== "tier4";
    });
    const eligibility: EligibilityWire[] = [];
    for (const id of candidates) {
      try {
        eligibility.push(await this.api.eligibility(id));
      } catch (err) {
        if (!(err instanceof ApiError) || err.status === 0) throw err;
      }
    }

    const [erosion, lint] = await Promise.all([this.api.erosion(), this.api.lint()]);

    this.data = {
      cycle: target,
      currentCycle: current,
      openCycle: target >= current,
      metrics,
      eligibility,
      erosion: erosion.task_types,
      lint: lint.findings,
      report: null,
    };
    return this.data;
  }

  /** True when the loaded cycle has nothing to review. */
  isEmpty(): boolean {
    return this.data !== null && this.data.metrics.length === 0;
  }

  /** Run the ceremony: the service applies breach demotions and
   * sampling adjustments and reports the rest. Blocked while the cycle
   * is open, since the evidence is still arriving. */
  async run(capacityConfirmed = true): Promise<RetroReportWire> {
    if (!this.data) throw new Error("load a cycle first");
    if (this.data.openCycle) {
      throw new Error(
        `cycle ${this.data.cycle} is still open; panels are a read-only preview until it closes`,
      );
    }
    const report = await this.api.runRetro(this.data.cycle, capacityConfirmed);
    this.data = {
      ...this.data,
      metrics: report.metrics,
      eligibility: report.promotion_eligibility,
      erosion: report.erosion,
      report,
    };
    return report;
  }

  /** One-click action on an erosion flag: classify the service's
   * suggested human-only item, AI-restricted, into the coming cycle.
   * The assessment is the task type's recorded one and the tier comes
   * from the suggestion; nothing is decided locally. */
  async scheduleHumanOnly(
    status: ErosionStatusWire,
    options: { owner: string; itemId?: string; timestamp?: string },
  ): Promise<ScheduleResult> {
    const suggestion = status.suggested_item;
    if (!status.flagged || !suggestion) {
      throw new Error(`${status.task_type_id} is not flagged for erosion`);
    }
    const taskType = await this.api.taskType(suggestion.task_type_id);
    if (!taskType.assessment) {
      throw new Error(
        `${suggestion.task_type_id} has no recorded assessment; classify it through the wizard instead`,
      );
    }
    const cycle = this.data?.currentCycle ?? status.baseline_cycle ?? 0;
    const itemId =
      options.itemId ?? `human-only-${suggestion.task_type_id}-c${cycle}`;
    const payload = buildClassificationPayload({
      itemId,
      title: suggestion.title,
      taskTypeId: suggestion.task_type_id,
      cycle,
      assessment: taskType.assessment,
      owner: options.owner,
      baselinePoints: null,
      appliedTier: suggestion.applied_tier,
      rationale: suggestion.rationale,
      timestamp: options.timestamp,
    });
    const response = await this.api.postClassification(payload);
    return {
      eventId: response.event_id,
      itemId,
      appliedTier: response.applied_tier,
    };
  }

  setChecklist(id: string, patch: { done?: boolean; note?: string }): void {
    const entry = this.checklist.find((e) => e.question.id === id);
    if (!entry) throw new Error(`no retro question ${id}`);
    if (patch.done !== undefined) entry.done = patch.done;
    if (patch.note !== undefined) entry.note = patch.note;
  }

  checklistComplete(): boolean {
    return this.checklist.every((entry) => entry.done);
  }
}

/** Evidence-window rows rendered next to an eligibility verdict. */
export function evidenceSummary(eligibility: EligibilityWire): string[] {
  return eligibility.window.map((cycle) => {
    const sampled =
      cycle.sampled_fraction === null
        ? ""
        : `, sampled ${formatRate(cycle.sampled_fraction)}`;
    return (
      `cycle ${cycle.cycle_index} at tier ${tierNumber(cycle.tier_during_cycle)}: ` +
      `${cycle.outputs_validated} validated, ` +
      `${cycle.outputs_with_major_or_critical} with major+ findings, ` +
      `${cycle.critical_count} critical${sampled}`
    );
  });
}
