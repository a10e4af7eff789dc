// Long-poll loop over GET /api/events. The server holds each request
// open until something is appended (or the wait window closes), so a
// demotion shows up here well inside the two-second board contract.
// All conflict resolution already happened server-side; this feed just
// replays the decided order.

import { ApiClient } from "./api";
import type { RegistryEventWire } from "./types";

export type FeedStatus = "idle" | "live" | "retrying" | "stopped";

export interface FeedOptions {
  onEvents: (events: RegistryEventWire[]) => void;
  onStatus?: (status: FeedStatus) => void;
  // long-poll window per request; the server caps it at 25
  waitSeconds?: number;
  retryDelayMs?: number;
  sleepFn?: (ms: number) => Promise<void>;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class EventFeed {
  cursor: number;
  status: FeedStatus = "idle";
  private running = false;

  constructor(
    private readonly api: ApiClient,
    after: number,
    private readonly options: FeedOptions,
  ) {
    this.cursor = after;
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    void this.loop();
  }

  stop(): void {
    this.running = false;
    this.setStatus("stopped");
  }

  private setStatus(status: FeedStatus): void {
    if (this.status === status) return;
    this.status = status;
    this.options.onStatus?.(status);
  }

  private async loop(): Promise<void> {
    const wait = this.options.waitSeconds ?? 25;
    const retryDelay = this.options.retryDelayMs ?? 1000;
    const doSleep = this.options.sleepFn ?? sleep;
    while (this.running) {
      let events: RegistryEventWire[];
      try {
        const response = await this.api.events(this.cursor, wait);
        events = response.events;
      } catch {
        this.setStatus("retrying");
        await doSleep(retryDelay);
        continue;
      }
      if (!this.running) break;
      this.setStatus("live");
      if (events.length > 0) {
        this.cursor = events[events.length - 1].event_id;
        this.options.onEvents(events);
      }
    }
  }
}
