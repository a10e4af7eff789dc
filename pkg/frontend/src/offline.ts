// Queue for writes attempted while the service is unreachable. Entries
// stay visible with an "unsynced" badge until a flush lands them; a
// flush stops at the first entry that is still unreachable so order is
// preserved.

export interface PendingWrite {
  id: number;
  path: string;
  body: Record<string, unknown>;
  label: string;
  queuedAt: string;
}

export interface FlushReport {
  sent: number;
  failed: { entry: PendingWrite; error: string }[];
  remaining: number;
}

export type PostFn = (path: string, body: Record<string, unknown>) => Promise<unknown>;

export class OfflineQueue {
  private seq = 0;
  private entries: PendingWrite[] = [];

  enqueue(path: string, body: Record<string, unknown>, label: string): PendingWrite {
    const entry: PendingWrite = {
      id: ++this.seq,
      path,
      body,
      label,
      queuedAt: new Date().toISOString(),
    };
    this.entries.push(entry);
    return entry;
  }

  get pending(): readonly PendingWrite[] {
    return this.entries;
  }

  get size(): number {
    return this.entries.length;
  }

  /** Replay queued writes in order. Unreachable stops the flush (still
   * offline); a rejected write is dropped and reported, since retrying
   * it verbatim can never succeed. */
  async flush(post: PostFn): Promise<FlushReport> {
    const report: FlushReport = { sent: 0, failed: [], remaining: 0 };
    while (this.entries.length > 0) {
      const entry = this.entries[0];
      try {
        await post(entry.path, entry.body);
        this.entries.shift();
        report.sent += 1;
      } catch (err) {
        const error = err as { status?: number; message?: string };
        if (error.status === 0) break;
        this.entries.shift();
        report.failed.push({ entry, error: error.message ?? String(err) });
      }
    }
    report.remaining = this.entries.length;
    return report;
  }
}
