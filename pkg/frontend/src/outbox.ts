import { ApiError } from "./client.js";
import type { PairRecord } from "./types.js";

export interface PendingDecision {
  pairId: string;
  decision: "accept" | "reject";
  note: string;
  attempts: number;
}

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export type SubmitFn = (d: PendingDecision) => Promise<PairRecord>;

export interface FlushOutcome {
  applied: PairRecord[];
  rejected: Array<{ pending: PendingDecision; status: number; message: string }>;
  stillPending: number;
}

const STORAGE_KEY = "rainforge.review.outbox";

/** Decisions queued for delivery. A decision the server has not acknowledged
 *  is never dropped: network failures keep it queued (and persisted) for the
 *  next flush; only a server response removes it, and an error response is
 *  surfaced to the caller rather than swallowed. */
export class DecisionOutbox {
  private queue: PendingDecision[] = [];

  constructor(
    private readonly submit: SubmitFn,
    private readonly storage?: StorageLike,
  ) {
    this.restore();
  }

  private restore(): void {
    if (!this.storage) return;
    const raw = this.storage.getItem(STORAGE_KEY);
    if (!raw) return;
    try {
      this.queue = JSON.parse(raw) as PendingDecision[];
    } catch {
      this.queue = [];
    }
  }

  private persist(): void {
    if (!this.storage) return;
    if (this.queue.length === 0) {
      this.storage.removeItem(STORAGE_KEY);
    } else {
      this.storage.setItem(STORAGE_KEY, JSON.stringify(this.queue));
    }
  }

  get size(): number {
    return this.queue.length;
  }

  pending(): PendingDecision[] {
    return [...this.queue];
  }

  enqueue(pairId: string, decision: "accept" | "reject", note: string): PendingDecision {
    // a newer decision for the same pair supersedes the queued one
    this.queue = this.queue.filter((d) => d.pairId !== pairId);
    const item: PendingDecision = { pairId, decision, note, attempts: 0 };
    this.queue.push(item);
    this.persist();
    return item;
  }

  /** Try to deliver everything queued, in order. Network failures stop the
   *  flush (order preserved for the next try); server error responses move
   *  the item into the rejected list for the UI to surface. */
  async flush(): Promise<FlushOutcome> {
    const applied: PairRecord[] = [];
    const rejected: FlushOutcome["rejected"] = [];
    while (this.queue.length > 0) {
      const item = this.queue[0];
      item.attempts += 1;
      try {
        const record = await this.submit(item);
        applied.push(record);
        this.queue.shift();
        this.persist();
      } catch (err) {
        if (err instanceof ApiError) {
          rejected.push({ pending: item, status: err.status, message: err.message });
          this.queue.shift();
          this.persist();
          continue;
        }
        // network-level failure: keep the item, stop flushing
        this.persist();
        break;
      }
    }
    return { applied, rejected, stillPending: this.queue.length };
  }
}
