// DOM for the three screens: Plan (classify + budget what-ifs), Board
// (cards, demote, outcomes, co-production timer), Retro (evidence and
// the guided checklist). Rendering only; every decision shown here was
// made by the service and arrived over the wire.

import { ApiClient } from "./api";
import { BoardStore, CardView } from "./board";
import { OfflineQueue } from "./offline";
import { RetroModel, RETRO_QUESTIONS, EMPTY_STATE_GUIDANCE, formatRate, evidenceSummary } from "./retro";
import { SessionModel } from "./session";
import { WizardModel, AXIS_GUIDE, ownerRequired } from "./wizard";
import {
  DemoteAction,
  DemotionDraft,
  OutcomeDraft,
  demoteDisabledReason,
  emptyOutcomeDraft,
  recordOutcome,
} from "./actions";
import type { AxisLevel, BudgetWire, CapabilityRating, EstimateWire, TierWire } from "./types";
import { tierLabel } from "./types";

export interface AppContext {
  api: ApiClient;
  actor: string;
  offline: OfflineQueue;
  wizard: WizardModel;
  board: BoardStore;
  retro: RetroModel;
  session: SessionModel;
  demote: DemoteAction;
  feedStatus: string;
  rerender: () => void;
  toast: (message: string) => void;
}

// ephemeral per-screen state that survives rerenders but not reloads
const ui = {
  outcomeItem: null as string | null,
  outcomeDraft: emptyOutcomeDraft(),
  capacity: "",
  budget: null as BudgetWire | null,
  retroCycle: null as number | null,
  sessionForm: { id: "", taskTypeId: "", itemId: "", interval: "" },
};

type Attrs = Record<string, string | boolean | ((event: Event) => void)>;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: (Node | string | null)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      node.addEventListener(key.replace(/^on/, ""), value);
    } else if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
      if (key === "disabled") (node as HTMLButtonElement).disabled = value;
    } else if (key === "value" && "value" in node) {
      (node as HTMLInputElement).value = value;
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child === null) continue;
    node.append(child);
  }
  return node;
}

function points(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(2).replace(/0+$/, "").replace(/\.$/, "");
}

function estimateRows(estimate: EstimateWire): HTMLElement {
  const row = (label: string, value: number) =>
    el("div", { class: "est-row" }, el("span", {}, label), el("span", {}, points(value)));
  return el(
    "div",
    { class: "estimate" },
    row("specification", estimate.specification),
    row("generation", estimate.generation),
    row("validation", estimate.validation),
    row("integration", estimate.integration),
    el("div", { class: "est-row est-total" }, el("span", {}, "total"), el("span", {}, points(estimate.total))),
  );
}

function tierBadge(tier: TierWire | null): HTMLElement {
  const cls = tier === null ? "none" : tier;
  return el("span", { class: `tier-badge tier-${cls}` }, tierLabel(tier));
}

// -- Plan screen

export function renderPlan(container: HTMLElement, ctx: AppContext): void {
  const wizard = ctx.wizard;
  container.replaceChildren();

  const form = el("section", { class: "panel" }, el("h2", {}, "Classify an item"));

  const idRow = el(
    "div",
    { class: "form-grid" },
    labeled("Item id", textInput(wizard.draft.itemId, (v) => wizard.update({ itemId: v }))),
    labeled("Title", textInput(wizard.draft.title, (v) => wizard.update({ title: v }))),
    labeled("Task type", textInput(wizard.draft.taskTypeId, (v) => wizard.update({ taskTypeId: v }))),
    labeled(
      "Cycle",
      numberInput(wizard.draft.cycle, (v) => wizard.update({ cycle: v })),
    ),
    labeled(
      "Baseline points",
      numberInput(wizard.draft.baselinePoints, (v) => wizard.update({ baselinePoints: v })),
    ),
    labeled("Owner", textInput(wizard.draft.owner ?? "", (v) => wizard.update({ owner: v || null }))),
  );
  form.append(idRow);

  // the four assessments, each with its working definitions inline
  for (const guide of AXIS_GUIDE) {
    const group = el(
      "fieldset",
      { class: "axis" },
      el("legend", {}, `${guide.label}: ${guide.question}`),
    );
    for (const choice of guide.choices) {
      const checked = wizard.draft.assessment[guide.field] === choice.value;
      const input = el("input", {
        type: "radio",
        name: `axis-${guide.field}`,
        value: choice.value,
        onchange: () => {
          wizard.setAxis(guide.field, choice.value as AxisLevel | CapabilityRating);
          ctx.rerender();
        },
      });
      if (checked) input.checked = true;
      group.append(
        el("label", { class: "choice" }, input, el("b", {}, choice.value), el("small", {}, choice.hint)),
      );
    }
    form.append(group);
  }

  const previewButton = el(
    "button",
    {
      onclick: () => {
        void wizard
          .refreshPreview()
          .then(() => ctx.rerender())
          .catch((err) => ctx.toast(String((err as Error).message)));
      },
    },
    "Preview tier and validation cost",
  );
  form.append(el("div", { class: "actions" }, previewButton));

  // preview panel: the service's decision plus its validation obligation
  if (wizard.preview) {
    const preview = wizard.preview;
    const panel = el(
      "section",
      { class: "panel preview" },
      el("h3", {}, "Preview"),
      el("p", {}, "Default ", tierBadge(preview.decision.tier), ` via ${preview.decision.matched_rule}`),
      el("p", { class: "muted" }, preview.decision.rationale),
    );
    if (wizard.draft.appliedTier) {
      panel.append(el("p", {}, "Override in effect: ", tierBadge(preview.applied_tier)));
    }
    const applied = wizard.appliedTier();
    if (applied && ownerRequired(applied) && !wizard.draft.owner) {
      panel.append(el("p", { class: "blocker" }, "This tier delegates work; name the accountable owner above."));
    }
    if (preview.estimate) {
      panel.append(el("h4", {}, "Validation obligation at this tier"), estimateRows(preview.estimate));
    } else {
      panel.append(el("p", { class: "muted" }, "Set baseline points to see the effort split."));
    }

    // what-if: fetch the service estimate at another tier, no commit
    const whatIfBar = el("div", { class: "whatif" }, el("span", {}, "What if this ran at: "));
    for (const tier of ["tier1", "tier2", "tier3", "tier4"] as TierWire[]) {
      whatIfBar.append(
        el(
          "button",
          {
            class: wizard.whatIf?.tier === tier ? "chip active" : "chip",
            onclick: () => {
              void wizard
                .toggleWhatIf(tier)
                .then(() => ctx.rerender())
                .catch((err) => ctx.toast(String((err as Error).message)));
            },
          },
          tierLabel(tier),
        ),
      );
    }
    panel.append(whatIfBar);
    if (wizard.whatIf?.estimate) {
      panel.append(
        el("h4", {}, `At ${tierLabel(wizard.whatIf.tier)} instead`),
        estimateRows(wizard.whatIf.estimate),
      );
    }

    const blockers = wizard.blockers();
    const submit = el(
      "button",
      {
        class: "primary",
        disabled: blockers.length > 0,
        title: blockers.length > 0 ? `missing: ${blockers.join(", ")}` : "",
        onclick: () => {
          void wizard
            .submit()
            .then((result) => {
              if (result.committed) {
                ctx.toast(`classified as ${tierLabel(result.appliedTier)} (event ${result.eventId})`);
              } else {
                ctx.toast(result.warning);
              }
              void ctx.board.load().then(() => ctx.rerender());
            })
            .catch((err) => ctx.toast(String((err as Error).message)));
        },
      },
      "Commit classification",
    );
    if (blockers.length > 0) {
      panel.append(el("p", { class: "blocker" }, `Still missing: ${blockers.join(", ")}`));
    }
    panel.append(el("div", { class: "actions" }, submit));
    form.append(panel);
  }

  container.append(form);
  container.append(renderGauge(ctx));
  container.append(renderQueue(ctx));
}

function renderGauge(ctx: AppContext): HTMLElement {
  const panel = el("section", { class: "panel" }, el("h2", {}, "Validation budget"));
  const input = textInput(ui.capacity, (v) => {
    ui.capacity = v;
  });
  input.setAttribute("placeholder", "team validation capacity (points)");
  panel.append(
    el(
      "div",
      { class: "actions" },
      input,
      el(
        "button",
        {
          onclick: () => {
            const items = Object.values(ctx.board.state?.items ?? {})
              .filter((item) => item.status !== "done")
              .map((item) => item.item_id);
            const capacity = ui.capacity === "" ? undefined : Number(ui.capacity);
            void ctx.board
              .gauge(items, capacity)
              .then((budget) => {
                ui.budget = budget;
                ctx.rerender();
              })
              .catch((err) => ctx.toast(String((err as Error).message)));
          },
        },
        "Check budget",
      ),
    ),
  );
  if (ui.budget) {
    const budget = ui.budget;
    const capacity = budget.available_capacity;
    const ratio =
      capacity && capacity > 0 ? Math.min(1, budget.required_validation / capacity) : 1;
    const bar = el("div", { class: "gauge" }, el("div", { class: budget.feasible ? "gauge-fill ok" : "gauge-fill over" }));
    (bar.firstChild as HTMLElement).style.width = `${Math.round(ratio * 100)}%`;
    panel.append(
      el(
        "p",
        {},
        `Requires ${points(budget.required_validation)} validation points` +
          (capacity !== null ? ` of ${points(capacity)} available` : "; no capacity set"),
      ),
      bar,
      el("p", { class: budget.feasible ? "ok" : "blocker" }, budget.feasible ? "fits" : "does not fit"),
    );
    for (const hint of budget.hints) {
      panel.append(
        el("p", { class: "muted" }, `${hint.action} ${hint.item_id} (${points(hint.validation_points)} validation points)`),
      );
    }
  }
  return panel;
}

function renderQueue(ctx: AppContext): HTMLElement {
  const panel = el("section", { class: "panel" }, el("h2", {}, "Unsynced writes"));
  if (ctx.offline.size === 0) {
    panel.append(el("p", { class: "muted" }, "Everything posted."));
    return panel;
  }
  for (const entry of ctx.offline.pending) {
    panel.append(
      el("p", {}, el("span", { class: "unsynced" }, "unsynced"), ` ${entry.label} (queued ${entry.queuedAt})`),
    );
  }
  panel.append(
    el(
      "button",
      {
        onclick: () => {
          void ctx.offline
            .flush((path, body) => ctx.api.post(path, body))
            .then((report) => {
              ctx.toast(`flushed ${report.sent}; ${report.remaining} still queued`);
              ctx.rerender();
            });
        },
      },
      "Retry now",
    ),
  );
  return panel;
}

// -- Board screen

export function renderBoard(container: HTMLElement, ctx: AppContext): void {
  container.replaceChildren();
  const state = ctx.board.state;
  if (!state) {
    container.append(el("p", { class: "muted" }, "Loading board..."));
    return;
  }

  // one strip row per task type with the demote control
  const strip = el("section", { class: "panel" }, el("h2", {}, `Cycle ${state.currentCycle}`));
  for (const [typeId, taskType] of Object.entries(state.taskTypes).sort()) {
    const disabledReason = demoteDisabledReason(taskType.tier);
    const row = el(
      "div",
      { class: "type-row" },
      el("b", {}, taskType.name),
      tierBadge(taskType.tier),
      el("span", { class: "muted" }, `rating ${taskType.rating}`),
      el("span", { class: "muted" }, `sampling ${formatRate(taskType.sampling_rate)}`),
      el(
        "button",
        {
          class: "danger",
          disabled: disabledReason !== null,
          title: disabledReason ?? "drops one tier, effective immediately",
          onclick: () => {
            const draft: DemotionDraft = {
              taskTypeId: typeId,
              cycle: state.currentCycle,
              rationale: window.prompt("Why demote? (recorded in the registry)") ?? "",
              expectedTier: taskType.tier,
            };
            let promptText: string;
            try {
              promptText = ctx.demote.arm(draft);
            } catch (err) {
              ctx.toast(String((err as Error).message));
              return;
            }
            if (!window.confirm(promptText)) {
              ctx.demote.cancel();
              return;
            }
            void ctx.demote
              .confirm()
              .then((result) => {
                if (result.applied) {
                  ctx.toast(`demoted to ${tierLabel(result.response.transition.to_tier)}`);
                } else {
                  ctx.toast(`already demoted; now ${tierLabel(result.currentTier)}`);
                  void ctx.board.load().then(() => ctx.rerender());
                }
              })
              .catch((err) => ctx.toast(String((err as Error).message)));
          },
        },
        "Demote",
      ),
    );
    strip.append(row);
  }
  container.append(strip);

  // violations are board-level facts, not card decorations only
  if (state.violations.length > 0) {
    const panel = el("section", { class: "panel violations" }, el("h2", {}, "Boundary violations"));
    for (const violation of state.violations) {
      panel.append(
        el(
          "p",
          {},
          el("span", { class: "violation-flag" }, "violation"),
          ` cycle ${violation.cycle}: ${violation.note}` +
            (violation.person ? ` (${violation.person})` : ""),
        ),
      );
    }
    container.append(panel);
  }

  const columns = el("div", { class: "columns" });
  for (const column of ctx.board.columns()) {
    const columnEl = el(
      "div",
      { class: "column" },
      el("h3", {}, `${column.title} (${column.cards.length})`),
    );
    for (const card of column.cards) {
      columnEl.append(renderCard(card, ctx));
    }
    columns.append(columnEl);
  }
  container.append(columns);

  container.append(renderSession(ctx));
}

function renderCard(card: CardView, ctx: AppContext): HTMLElement {
  // tier badge and violation flag are unconditional parts of the card
  const node = el(
    "div",
    { class: card.violated ? "card violated" : "card" },
    el("div", { class: "card-head" }, tierBadge(card.tier), el("b", {}, card.title)),
    el("div", { class: "muted" }, `${card.itemId} / ${card.taskTypeName}`),
    el("div", {}, card.owner ? `owner: ${card.owner}` : "no owner"),
  );
  if (card.pilot) node.append(el("span", { class: "chip pilot" }, "pilot"));
  if (card.aiRestricted) node.append(el("span", { class: "chip restricted" }, "human-only"));
  if (card.violated) node.append(el("span", { class: "violation-flag" }, "violation"));

  if (ui.outcomeItem === card.itemId) {
    node.append(renderOutcomeForm(card, ctx));
  } else {
    node.append(
      el(
        "button",
        {
          class: "small",
          onclick: () => {
            ui.outcomeItem = card.itemId;
            ui.outcomeDraft = emptyOutcomeDraft(card.itemId);
            ui.outcomeDraft.cycle = ctx.board.state?.currentCycle ?? null;
            ctx.rerender();
          },
        },
        "Record outcome",
      ),
    );
  }
  return node;
}

function renderOutcomeForm(card: CardView, ctx: AppContext): HTMLElement {
  const draft = ui.outcomeDraft;
  const form = el("div", { class: "outcome-form" });

  const detected = el("select", {
    onchange: (event) => {
      draft.detectedIn = (event.target as HTMLSelectElement).value as OutcomeDraft["detectedIn"];
    },
  });
  for (const point of ["review", "sampling", "integration", "post_delivery"]) {
    const option = el("option", { value: point }, point);
    if (point === draft.detectedIn) option.selected = true;
    detected.append(option);
  }

  const firstPass = el("input", {
    type: "checkbox",
    onchange: (event) => {
      draft.firstPass = (event.target as HTMLInputElement).checked;
    },
  });
  firstPass.checked = draft.firstPass;

  form.append(
    labeled("Detected in", detected),
    el("label", { class: "inline" }, firstPass, "accepted on first pass"),
    labeled(
      "Review minutes",
      numberInput(draft.reviewMinutes, (v) => {
        draft.reviewMinutes = v;
      }),
    ),
  );

  const findingsBox = el("div", {});
  const renderFindings = () => {
    findingsBox.replaceChildren();
    draft.findings.forEach((finding, index) => {
      const severity = el("select", {
        onchange: (event) => {
          finding.severity = (event.target as HTMLSelectElement).value as typeof finding.severity;
        },
      });
      for (const level of ["minor", "major", "critical"]) {
        const option = el("option", { value: level }, level);
        if (level === finding.severity) option.selected = true;
        severity.append(option);
      }
      findingsBox.append(
        el(
          "div",
          { class: "finding-row" },
          severity,
          textInput(finding.description, (v) => {
            finding.description = v;
          }),
          el(
            "button",
            {
              class: "small",
              onclick: () => {
                draft.findings.splice(index, 1);
                renderFindings();
              },
            },
            "remove",
          ),
        ),
      );
    });
  };
  renderFindings();
  form.append(
    findingsBox,
    el(
      "button",
      {
        class: "small",
        onclick: () => {
          draft.findings.push({ severity: "minor", description: "" });
          renderFindings();
        },
      },
      "Add finding",
    ),
  );

  form.append(
    el(
      "div",
      { class: "actions" },
      el(
        "button",
        {
          class: "primary",
          onclick: () => {
            void recordOutcome(ctx.api, draft)
              .then((response) => {
                const kinds = response.events.map((e) => e.kind).join(", ");
                ctx.toast(`recorded (${kinds}); type now ${tierLabel(response.task_type_tier)}`);
                ui.outcomeItem = null;
                void ctx.board.load().then(() => ctx.rerender());
              })
              .catch((err) => ctx.toast(String((err as Error).message)));
          },
        },
        "Submit outcome",
      ),
      el(
        "button",
        {
          onclick: () => {
            ui.outcomeItem = null;
            ctx.rerender();
          },
        },
        "Cancel",
      ),
    ),
  );
  return form;
}

function renderSession(ctx: AppContext): HTMLElement {
  const panel = el("section", { class: "panel" }, el("h2", {}, "Co-production session"));
  const session = ctx.session.session;

  if (!session || session.status !== "open") {
    const form = ui.sessionForm;
    panel.append(
      el(
        "div",
        { class: "form-grid" },
        labeled("Session id", textInput(form.id, (v) => (form.id = v))),
        labeled("Task type", textInput(form.taskTypeId, (v) => (form.taskTypeId = v))),
        labeled("Item", textInput(form.itemId, (v) => (form.itemId = v))),
        labeled("Checkpoint interval (min)", textInput(form.interval, (v) => (form.interval = v))),
      ),
      el(
        "button",
        {
          onclick: () => {
            if (!form.id) {
              ctx.toast("session id required");
              return;
            }
            void ctx.session
              .open(form.id, {
                cycle: ctx.board.state?.currentCycle ?? 0,
                owner: ctx.actor,
                taskTypeId: form.taskTypeId || undefined,
                itemId: form.itemId || undefined,
                checkpointIntervalMinutes: form.interval ? Number(form.interval) : undefined,
                attestedNotes: true,
              })
              .then(() => ctx.rerender())
              .catch((err) => ctx.toast(String((err as Error).message)));
          },
        },
        "Open session",
      ),
    );
    if (session) {
      panel.append(el("p", { class: "muted" }, `last session ${session.session_id}: ${session.status}`));
    }
    return panel;
  }

  const timer = ctx.session.timer;
  const due = timer.checkpointDue();
  panel.append(
    el(
      "p",
      {},
      el("b", {}, session.session_id),
      ` owned by ${session.owner}; ${session.checkpoints.length} checkpoints, ` +
        `${session.counterarguments.length} counterarguments, ${session.pivots.length} pivots`,
    ),
    el(
      "p",
      { class: due ? "blocker" : "" },
      el("span", { id: "session-clock" }, formatClock(timer.elapsedMinutes())),
      el(
        "span",
        { id: "session-due" },
        due
          ? " checkpoint due: summarize and sanity-check the direction"
          : ` next checkpoint at ${formatClock(timer.nextCheckpointAt ?? 0)}`,
      ),
    ),
  );

  const ask = (label: string): string | null => window.prompt(label);
  const actions = el(
    "div",
    { class: "actions" },
    el(
      "button",
      {
        class: due ? "primary" : "",
        onclick: () => {
          const note = ask("Checkpoint note: where are we, and does the approach still hold?");
          if (note === null) return;
          void ctx.session
            .checkpoint(note)
            .then((result) => {
              if (!result.posted) ctx.toast("offline; checkpoint queued unsynced");
              ctx.rerender();
            })
            .catch((err) => ctx.toast(String((err as Error).message)));
        },
      },
      "Checkpoint",
    ),
    el(
      "button",
      {
        onclick: () => {
          const description = ask("Pivot description:");
          if (!description) return;
          const significant = window.confirm("Mark this pivot significant (changes the goal or approach)?");
          const adopted = window.confirm("Was the pivot adopted?");
          void ctx.session
            .pivot(description, { significant, adopted })
            .then((result) => {
              if (!result.posted) ctx.toast("offline; pivot queued unsynced");
              ctx.rerender();
            })
            .catch((err) => ctx.toast(String((err as Error).message)));
        },
      },
      "Pivot",
    ),
    el(
      "button",
      {
        onclick: () => {
          const text = ask("Counterargument against the current direction:");
          if (!text) return;
          void ctx.session
            .counterargument(text)
            .then((result) => {
              if (!result.posted) ctx.toast("offline; note queued unsynced");
              ctx.rerender();
            })
            .catch((err) => ctx.toast(String((err as Error).message)));
        },
      },
      "Counterargument",
    ),
    el(
      "button",
      {
        onclick: () => {
          const summary = ask("Session summary:");
          if (summary === null) return;
          void ctx.session
            .finalize(summary)
            .then(() => {
              ctx.toast("session finalized");
              ctx.rerender();
            })
            .catch((err) => ctx.toast(String((err as Error).message)));
        },
      },
      "Finalize",
    ),
    el(
      "button",
      {
        class: "danger",
        onclick: () => {
          const reason = ask("Abandon reason:");
          if (reason === null) return;
          void ctx.session
            .abandon(reason)
            .then(() => ctx.rerender())
            .catch((err) => ctx.toast(String((err as Error).message)));
        },
      },
      "Abandon",
    ),
  );
  panel.append(actions);

  for (const checkpoint of session.checkpoints) {
    panel.append(
      el(
        "p",
        { class: "muted" },
        `${formatClock(checkpoint.at_minutes)} ${checkpoint.note || "(no note)"}` +
          (checkpoint.missed ? " [late]" : ""),
      ),
    );
  }
  for (const entry of ctx.session.unsynced()) {
    panel.append(el("p", {}, el("span", { class: "unsynced" }, "unsynced"), ` ${entry.label}`));
  }
  return panel;
}

function formatClock(minutes: number): string {
  const whole = Math.floor(minutes);
  const seconds = Math.floor((minutes - whole) * 60);
  return `${whole}m${String(seconds).padStart(2, "0")}s`;
}

// -- Retro screen

export function renderRetro(container: HTMLElement, ctx: AppContext): void {
  container.replaceChildren();
  const retro = ctx.retro;
  const data = retro.data;

  const header = el("section", { class: "panel" }, el("h2", {}, "Retrospective"));
  const cycleInput = numberInput(ui.retroCycle ?? data?.cycle ?? null, (v) => {
    ui.retroCycle = v;
  });
  header.append(
    el(
      "div",
      { class: "actions" },
      labeled("Cycle", cycleInput),
      el(
        "button",
        {
          onclick: () => {
            void retro
              .load(ui.retroCycle ?? undefined)
              .then(() => ctx.rerender())
              .catch((err) => ctx.toast(String((err as Error).message)));
          },
        },
        "Load cycle",
      ),
    ),
  );
  container.append(header);
  if (!data) return;

  if (data.openCycle) {
    container.append(
      el(
        "p",
        { class: "banner" },
        `Cycle ${data.cycle} is still open; this is a read-only preview. The retro itself runs after close.`,
      ),
    );
  }

  if (retro.isEmpty()) {
    container.append(el("section", { class: "panel" }, el("p", { class: "muted" }, EMPTY_STATE_GUIDANCE)));
  }

  if (data.metrics.length > 0) {
    const panel = el("section", { class: "panel" }, el("h2", {}, `Cycle ${data.cycle} metrics`));
    const table = el(
      "table",
      {},
      el(
        "tr",
        {},
        el("th", {}, "task type"),
        el("th", {}, "outcomes"),
        el("th", {}, "first-pass"),
        el("th", {}, "error rate"),
        el("th", {}, "critical"),
        el("th", {}, "mean review min"),
      ),
    );
    for (const metrics of data.metrics) {
      table.append(
        el(
          "tr",
          {},
          el("td", {}, metrics.task_type_id),
          el("td", {}, String(metrics.outcomes_count)),
          el("td", {}, formatRate(metrics.first_pass_rate)),
          el("td", {}, formatRate(metrics.error_rate)),
          el("td", {}, String(metrics.critical_count)),
          el("td", {}, metrics.mean_review_minutes === null ? "n/a" : points(metrics.mean_review_minutes)),
        ),
      );
    }
    panel.append(table);
    container.append(panel);
  }

  if (data.report) {
    const panel = el("section", { class: "panel" }, el("h2", {}, "Applied this retro"));
    if (data.report.breach_demotions.length === 0 && data.report.sampling_adjustments.length === 0) {
      panel.append(el("p", { class: "muted" }, "No breach demotions, no sampling changes."));
    }
    for (const demotion of data.report.breach_demotions) {
      panel.append(
        el(
          "p",
          {},
          `${demotion.task_type_id} demoted ${tierLabel(demotion.from_tier)} to ${tierLabel(demotion.to_tier)}: ${demotion.rationale}`,
        ),
      );
    }
    for (const change of data.report.sampling_adjustments) {
      panel.append(
        el(
          "p",
          {},
          `${String(change.task_type_id)} sampling ${formatRate(change.old_rate as number)} to ${formatRate(change.new_rate as number)}: ${String(change.reason)}`,
        ),
      );
    }
    container.append(panel);
  }

  const eligibilityPanel = el("section", { class: "panel" }, el("h2", {}, "Promotion eligibility"));
  if (data.eligibility.length === 0) {
    eligibilityPanel.append(el("p", { class: "muted" }, "No delegated task types with promotion headroom."));
  }
  for (const eligibility of data.eligibility) {
    const block = el(
      "div",
      { class: "evidence" },
      el(
        "p",
        {},
        el("b", {}, eligibility.task_type_id),
        " ",
        tierBadge(eligibility.current_tier),
        eligibility.eligible
          ? ` eligible for ${tierLabel(eligibility.target_tier)}`
          : " not eligible",
      ),
    );
    for (const blocker of eligibility.blockers) {
      block.append(el("p", { class: "blocker" }, blocker));
    }
    for (const line of evidenceSummary(eligibility)) {
      block.append(el("p", { class: "muted" }, line));
    }
    eligibilityPanel.append(block);
  }
  container.append(eligibilityPanel);

  const erosionPanel = el("section", { class: "panel" }, el("h2", {}, "Competence erosion"));
  const flagged = data.erosion.filter((status) => status.flagged);
  if (flagged.length === 0) {
    erosionPanel.append(el("p", { class: "muted" }, "No task type has gone too long without human-only work."));
  }
  for (const status of flagged) {
    erosionPanel.append(
      el(
        "div",
        { class: "evidence" },
        el(
          "p",
          {},
          el("b", {}, status.task_type_id),
          ` flagged: ${status.cycles_since_human_only} cycles since humans last did this work`,
        ),
        el(
          "button",
          {
            onclick: () => {
              void retro
                .scheduleHumanOnly(status, { owner: ctx.actor })
                .then((result) => {
                  ctx.toast(`scheduled ${result.itemId} as ${tierLabel(result.appliedTier)}`);
                  void ctx.board.load().then(() => ctx.rerender());
                })
                .catch((err) => ctx.toast(String((err as Error).message)));
            },
          },
          "Schedule human-only cycle",
        ),
      ),
    );
  }
  container.append(erosionPanel);

  if (data.lint.length > 0) {
    const panel = el("section", { class: "panel" }, el("h2", {}, "Lint findings"));
    for (const finding of data.lint) {
      panel.append(el("p", {}, el("b", {}, finding.rule), ` ${finding.subject}: ${finding.detail}`));
    }
    container.append(panel);
  }

  // the guided checklist; notes stay local to the meeting
  const checklistPanel = el("section", { class: "panel" }, el("h2", {}, "Guided checklist"));
  for (const entry of retro.checklist) {
    const checkbox = el("input", {
      type: "checkbox",
      onchange: (event) => {
        retro.setChecklist(entry.question.id, {
          done: (event.target as HTMLInputElement).checked,
        });
      },
    });
    checkbox.checked = entry.done;
    checklistPanel.append(
      el(
        "div",
        { class: "question" },
        el("label", { class: "inline" }, checkbox, el("b", {}, entry.question.prompt)),
        el("p", { class: "muted" }, entry.question.guide),
        textInput(entry.note, (v) => retro.setChecklist(entry.question.id, { note: v })),
      ),
    );
  }
  container.append(checklistPanel);

  const runPanel = el("section", { class: "panel" });
  runPanel.append(
    el(
      "button",
      {
        class: "primary",
        disabled: data.openCycle,
        title: data.openCycle ? "the cycle is still open" : "applies breach demotions and sampling changes",
        onclick: () => {
          const capacity = window.confirm("Can the team resource the validation implied by promotions?");
          void retro
            .run(capacity)
            .then((report) => {
              ctx.toast(`retro ran; ${report.events_appended.length} events appended`);
              ctx.rerender();
            })
            .catch((err) => ctx.toast(String((err as Error).message)));
        },
      },
      "Run retrospective",
    ),
  );
  container.append(runPanel);
}

// -- shared small controls

function labeled(label: string, control: HTMLElement): HTMLElement {
  return el("label", { class: "field" }, el("span", {}, label), control);
}

function textInput(value: string, onInput: (value: string) => void): HTMLInputElement {
  return el("input", {
    type: "text",
    value,
    oninput: (event) => onInput((event.target as HTMLInputElement).value),
  });
}

function numberInput(value: number | null, onInput: (value: number | null) => void): HTMLInputElement {
  return el("input", {
    type: "number",
    value: value === null ? "" : String(value),
    oninput: (event) => {
      const raw = (event.target as HTMLInputElement).value;
      onInput(raw === "" ? null : Number(raw));
    },
  });
}

export function resetUiState(): void {
  ui.outcomeItem = null;
  ui.outcomeDraft = emptyOutcomeDraft();
  ui.budget = null;
  ui.retroCycle = null;
}
