// App entry. One page, three screens (Plan, Board, Retro) plus the
// co-production timer on the board. State lives in the models; this
// file only wires them to the DOM and the event stream.

import { ApiClient } from "./api";
import { DemoteAction } from "./actions";
import { BoardStore } from "./board";
import { EventFeed } from "./events";
import { OfflineQueue } from "./offline";
import { RetroModel } from "./retro";
import { SessionModel } from "./session";
import { WizardModel } from "./wizard";
import { AppContext, renderBoard, renderPlan, renderRetro } from "./render";

type Screen = "plan" | "board" | "retro";

function resolveActor(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("actor");
  if (fromQuery) {
    localStorage.setItem("dashboard.actor", fromQuery);
    return fromQuery;
  }
  const stored = localStorage.getItem("dashboard.actor");
  if (stored) return stored;
  const answer = window.prompt("Operating as (roster name):") ?? "dev";
  localStorage.setItem("dashboard.actor", answer);
  return answer;
}

const screenEl = document.getElementById("screen") as HTMLElement;
const connEl = document.getElementById("conn") as HTMLElement;
const toastEl = document.getElementById("toast") as HTMLElement;

let current: Screen = "board";
let toastTimer: number | undefined;

const actor = resolveActor();
const api = new ApiClient({ baseUrl: "", actor });
const offline = new OfflineQueue();

const ctx: AppContext = {
  api,
  actor,
  offline,
  wizard: new WizardModel(api, offline),
  board: new BoardStore(api),
  retro: new RetroModel(api),
  session: new SessionModel(api, offline),
  demote: new DemoteAction(api),
  feedStatus: "idle",
  rerender,
  toast,
};

function toast(message: string): void {
  toastEl.textContent = message;
  toastEl.classList.add("show");
  window.clearTimeout(toastTimer);
  toastTimer = window.setTimeout(() => toastEl.classList.remove("show"), 4000);
}

function rerender(): void {
  if (current === "plan") renderPlan(screenEl, ctx);
  if (current === "board") renderBoard(screenEl, ctx);
  if (current === "retro") renderRetro(screenEl, ctx);
  for (const button of document.querySelectorAll<HTMLButtonElement>("nav [data-screen]")) {
    button.classList.toggle("active", button.dataset.screen === current);
  }
}

for (const button of document.querySelectorAll<HTMLButtonElement>("nav [data-screen]")) {
  button.addEventListener("click", () => {
    current = button.dataset.screen as Screen;
    if (current === "retro" && !ctx.retro.data) {
      void ctx.retro.load().then(rerender).catch((err) => toast(String((err as Error).message)));
    }
    rerender();
  });
}

function flushQueue(): void {
  if (offline.size === 0) return;
  void offline.flush((path, body) => api.post(path, body)).then((report) => {
    if (report.sent > 0) toast(`synced ${report.sent} queued write(s)`);
    for (const failure of report.failed) {
      toast(`queued write rejected: ${failure.entry.label}: ${failure.error}`);
    }
    rerender();
  });
}

async function boot(): Promise<void> {
  for (;;) {
    try {
      await ctx.board.load();
      break;
    } catch {
      toast("service unreachable; retrying...");
      await new Promise((resolve) => setTimeout(resolve, 2000));
    }
  }

  const feed = new EventFeed(api, ctx.board.lastEventId, {
    onEvents: (events) => {
      let changed = false;
      for (const event of events) {
        changed = ctx.board.applyEvent(event) || changed;
      }
      if (ctx.board.stale) {
        // ratings, eligibility, budgets may have moved; refetch
        void ctx.board.load().then(rerender);
      } else if (changed) {
        rerender();
      }
    },
    onStatus: (status) => {
      ctx.feedStatus = status;
      connEl.textContent = status;
      connEl.className = `conn ${status}`;
      if (status === "live") flushQueue();
    },
  });
  feed.start();

  // keep the session clock honest without rebuilding the screen
  window.setInterval(() => {
    const clock = document.getElementById("session-clock");
    const session = ctx.session.session;
    if (!clock || !session || session.status !== "open") return;
    const timer = ctx.session.timer;
    const whole = Math.floor(timer.elapsedMinutes());
    const seconds = Math.floor((timer.elapsedMinutes() - whole) * 60);
    clock.textContent = `${whole}m${String(seconds).padStart(2, "0")}s`;
    if (timer.checkpointDue()) {
      const due = document.getElementById("session-due");
      if (due) due.textContent = " checkpoint due: summarize and sanity-check the direction";
      clock.parentElement?.classList.add("blocker");
    }
  }, 1000);

  rerender();
}

void boot();
