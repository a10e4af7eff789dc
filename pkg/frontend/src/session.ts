// Co-production sessions: the timer runs client-side, but every
// checkpoint, pivot, counterargument, and close posts to the service
// the moment it happens. When the service is unreachable the note is
// queued and shown with an "unsynced" badge until a flush lands it.

import { ApiClient, ApiError } from "./api";
import { OfflineQueue, PendingWrite } from "./offline";
import type { SessionWire } from "./types";

export type NowFn = () => number;

/** Wall-clock anchor that converts "now" into session minutes. The
 * interval and due threshold stay server-side; this only keeps time. */
export class SessionTimer {
  private anchorMs: number | null = null;
  private anchorMinutes = 0;
  // from the service's session detail; null until the first refresh
  nextCheckpointAt: number | null = null;

  constructor(private readonly nowMs: NowFn = Date.now) {}

  start(atMinutes = 0): void {
    this.anchorMs = this.nowMs();
    this.anchorMinutes = atMinutes;
  }

  get started(): boolean {
    return this.anchorMs !== null;
  }

  elapsedMinutes(): number {
    if (this.anchorMs === null) return this.anchorMinutes;
    return this.anchorMinutes + (this.nowMs() - this.anchorMs) / 60_000;
  }

  /** Due the moment the clock passes the service-announced next
   * checkpoint time. */
  checkpointDue(): boolean {
    if (this.nextCheckpointAt === null) return false;
    return this.elapsedMinutes() >= this.nextCheckpointAt;
  }

  minutesUntilCheckpoint(): number | null {
    if (this.nextCheckpointAt === null) return null;
    return Math.max(0, this.nextCheckpointAt - this.elapsedMinutes());
  }
}

export interface SessionPostResult {
  posted: boolean;
  // present when posted
  session?: SessionWire;
  // present when queued offline instead
  pending?: PendingWrite;
}

export class SessionModel {
  session: SessionWire | null = null;
  readonly timer: SessionTimer;

  constructor(
    private readonly api: ApiClient,
    private readonly offline?: OfflineQueue,
    nowMs: NowFn = Date.now,
  ) {
    this.timer = new SessionTimer(nowMs);
  }

  get sessionId(): string {
    if (!this.session) throw new Error("no session open");
    return this.session.session_id;
  }

  /** Open a session and start the local clock at zero. Opening is not
   * queueable: without the service there is no session to attach
   * notes to, so this surfaces the failure instead. */
  async open(
    sessionId: string,
    options: {
      cycle: number;
      owner: string;
      taskTypeId?: string;
      itemId?: string;
      checkpointIntervalMinutes?: number;
      attestedNotes?: boolean;
      timestamp?: string;
    },
  ): Promise<SessionWire> {
    const body: Record<string, unknown> = {
      action: "opened",
      cycle: options.cycle,
      owner: options.owner,
    };
    if (options.taskTypeId) body.task_type_id = options.taskTypeId;
    if (options.itemId) body.item_id = options.itemId;
    if (options.checkpointIntervalMinutes !== undefined) {
      body.checkpoint_interval_minutes = options.checkpointIntervalMinutes;
    }
    if (options.attestedNotes !== undefined) body.attested_notes = options.attestedNotes;
    if (options.timestamp) body.timestamp = options.timestamp;
    const response = await this.api.postSessionEvent(sessionId, body);
    this.session = response.session;
    this.timer.start(0);
    await this.refreshTimer();
    return this.session;
  }

  /** Attach to a session someone already opened; the clock resumes
   * from the supplied session-minutes mark. */
  async attach(sessionId: string, atMinutes: number): Promise<SessionWire> {
    const detail = await this.api.session(sessionId, atMinutes);
    this.session = detail.session;
    this.timer.start(atMinutes);
    this.timer.nextCheckpointAt = detail.timer?.next_checkpoint_at_minutes ?? null;
    return this.session;
  }

  /** Pull the service's view of the timer (interval semantics live
   * there) without touching the local clock. */
  async refreshTimer(): Promise<void> {
    const detail = await this.api.session(this.sessionId, this.timer.elapsedMinutes());
    this.session = detail.session;
    this.timer.nextCheckpointAt = detail.timer?.next_checkpoint_at_minutes ?? null;
  }

  checkpoint(note: string, atMinutes?: number): Promise<SessionPostResult> {
    return this.post(
      { action: "checkpoint", note, at_minutes: atMinutes ?? this.timer.elapsedMinutes() },
      `checkpoint: ${note || "(no note)"}`,
    );
  }

  pivot(
    description: string,
    options: { significant?: boolean; adopted?: boolean; atMinutes?: number } = {},
  ): Promise<SessionPostResult> {
    return this.post(
      {
        action: "pivot",
        description,
        significant: options.significant ?? false,
        adopted: options.adopted ?? false,
        at_minutes: options.atMinutes ?? this.timer.elapsedMinutes(),
      },
      `pivot: ${description}`,
    );
  }

  meritReview(
    pivotIndex: number,
    rationale: string,
    atMinutes?: number,
  ): Promise<SessionPostResult> {
    return this.post(
      {
        action: "merit_review",
        pivot_index: pivotIndex,
        rationale,
        at_minutes: atMinutes ?? this.timer.elapsedMinutes(),
      },
      `merit review of pivot ${pivotIndex}`,
    );
  }

  counterargument(text: string, atMinutes?: number): Promise<SessionPostResult> {
    return this.post(
      {
        action: "counterargument",
        text,
        at_minutes: atMinutes ?? this.timer.elapsedMinutes(),
      },
      `counterargument: ${text}`,
    );
  }

  finalize(summary: string, atMinutes?: number): Promise<SessionPostResult> {
    return this.post(
      {
        action: "finalized",
        summary,
        at_minutes: atMinutes ?? this.timer.elapsedMinutes(),
      },
      "finalize",
      // closing is a deliberate act; if the service is down, fail loud
      { queueable: false },
    );
  }

  abandon(reason: string, atMinutes?: number): Promise<SessionPostResult> {
    return this.post(
      {
        action: "abandoned",
        reason,
        at_minutes: atMinutes ?? this.timer.elapsedMinutes(),
      },
      "abandon",
      { queueable: false },
    );
  }

  /** Queued writes for this session, for rendering with "unsynced"
   * badges next to the notes that have not landed yet. */
  unsynced(): readonly PendingWrite[] {
    if (!this.offline || !this.session) return [];
    const path = this.eventsPath();
    return this.offline.pending.filter((entry) => entry.path === path);
  }

  /** Replay queued writes once the service is reachable again. The
   * queue may hold non-session writes too; paths were fixed at enqueue
   * time, so one poster serves them all. */
  async flushUnsynced(): Promise<{ sent: number; remaining: number }> {
    if (!this.offline) return { sent: 0, remaining: 0 };
    const report = await this.offline.flush((path, body) => this.api.post(path, body));
    if (report.sent > 0 && this.session) await this.refreshTimer();
    return { sent: report.sent, remaining: report.remaining };
  }

  private eventsPath(): string {
    return `/api/sessions/${encodeURIComponent(this.sessionId)}/events`;
  }

  private async post(
    fields: Record<string, unknown>,
    label: string,
    options: { queueable?: boolean } = {},
  ): Promise<SessionPostResult> {
    if (!this.session) throw new Error("no session open");
    const body = { ...fields, cycle: this.session.opened_cycle };
    try {
      const response = await this.api.postSessionEvent(this.sessionId, body);
      this.session = response.session;
      if (fields.action === "checkpoint") await this.refreshTimer();
      return { posted: true, session: response.session };
    } catch (err) {
      const queueable = options.queueable ?? true;
      if (queueable && this.offline && err instanceof ApiError && err.status === 0) {
        const pending = this.offline.enqueue(this.eventsPath(), body, label);
        return { posted: false, pending };
      }
      throw err;
    }
  }
}
