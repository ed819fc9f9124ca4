import { ApiClient } from "./client.js";
import { DecisionOutbox, type StorageLike } from "./outbox.js";
import { ReviewQueue } from "./queue.js";
import { ViewState, type Scheduler } from "./views.js";
import type { PairRecord, ViewName } from "./types.js";

export interface ControllerOptions {
  scheduler?: Scheduler;
  storage?: StorageLike;
  blinkIntervalMs?: number;
}

/** Everything the review screen does, minus the DOM: queue position, view
 *  selection, decision submission with offline retention, status messages. */
export class ReviewController {
  readonly queue = new ReviewQueue();
  readonly views: ViewState;
  readonly outbox: DecisionOutbox;
  message = "";
  offlineBanner = false;
  private changeListeners: Array<() => void> = [];
  private readonly blinkIntervalMs: number;

  constructor(
    private readonly client: ApiClient,
    options: ControllerOptions = {},
  ) {
    this.views = new ViewState(options.scheduler);
    this.blinkIntervalMs = options.blinkIntervalMs ?? 500;
    this.outbox = new DecisionOutbox(
      (d) => this.client.submitReview(d.pairId, d.decision, d.note),
      options.storage,
    );
    this.views.onChange(() => this.notify());
  }

  onChange(listener: () => void): void {
    this.changeListeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.changeListeners) listener();
  }

  async load(): Promise<void> {
    try {
      await this.queue.load(this.client);
      this.offlineBanner = false;
      this.message = this.queue.isEmpty ? "Queue is empty: nothing awaiting review." : "";
    } catch {
      this.offlineBanner = true;
      this.message = "Review service unreachable. Press l to retry.";
    }
    this.notify();
  }

  current(): PairRecord | null {
    return this.queue.current();
  }

  /** URL of the pixels to show right now; the client never touches them. */
  imageUrl(): string | null {
    const record = this.current();
    if (!record) return null;
    return this.client.imageUrl(record.pair_id, this.views.displayed());
  }

  setView(view: ViewName): void {
    this.views.set(view);
  }

  cycleView(direction: 1 | -1 = 1): void {
    this.views.cycle(direction);
  }

  toggleBlink(): void {
    this.views.toggleBlink(this.blinkIntervalMs);
  }

  next(): void {
    this.queue.advance();
    this.notify();
  }

  previous(): void {
    this.queue.back();
    this.notify();
  }

  /** Submit a decision for the current pair. Success advances the queue;
   *  an HTTP error keeps position and surfaces the server's message
   *  verbatim; a network failure retains the decision for retry. */
  async decide(decision: "accept" | "reject", note: string): Promise<void> {
    const record = this.current();
    if (!record) {
      this.message = "Nothing selected.";
      this.notify();
      return;
    }
    this.outbox.enqueue(record.pair_id, decision, note);
    const outcome = await this.outbox.flush();
    if (outcome.rejected.length > 0) {
      const failure = outcome.rejected[outcome.rejected.length - 1];
      this.message = `${failure.status}: ${failure.message}`;
      this.offlineBanner = false;
    } else if (outcome.stillPending > 0) {
      this.offlineBanner = true;
      this.message = `Offline: ${outcome.stillPending} decision(s) queued for retry.`;
    } else {
      this.offlineBanner = false;
      const latest = outcome.applied[outcome.applied.length - 1];
      this.message = `${latest.pair_id}: ${latest.status}`;
      for (const applied of outcome.applied) {
        this.queue.remove(applied.pair_id);
      }
    }
    this.notify();
  }

  /** Retry queued decisions (e.g. after coming back online). */
  async retryPending(): Promise<void> {
    if (this.outbox.size === 0) {
      this.message = "No queued decisions.";
      this.notify();
      return;
    }
    const outcome = await this.outbox.flush();
    if (outcome.stillPending > 0) {
      this.offlineBanner = true;
      this.message = `Still offline: ${outcome.stillPending} decision(s) queued.`;
    } else {
      this.offlineBanner = false;
      this.message = `Delivered ${outcome.applied.length} queued decision(s).`;
      for (const applied of outcome.applied) {
        this.queue.remove(applied.pair_id);
      }
      if (outcome.rejected.length > 0) {
        const failure = outcome.rejected[outcome.rejected.length - 1];
        this.message = `${failure.status}: ${failure.message}`;
      }
    }
    this.notify();
  }
}

export type KeyAction =
  | { kind: "next" }
  | { kind: "previous" }
  | { kind: "view"; view: ViewName }
  | { kind: "cycle"; direction: 1 | -1 }
  | { kind: "blink" }
  | { kind: "accept" }
  | { kind: "reject" }
  | { kind: "retry" }
  | { kind: "reload" }
  | { kind: "focus-note" };

/** Keyboard map: the whole queue is reviewable without a pointer. */
export function keyToAction(key: string): KeyAction | null {
  switch (key) {
    case "j":
    case "ArrowRight":
      return { kind: "next" };
    case "k":
    case "ArrowLeft":
      return { kind: "previous" };
    case "1":
      return { kind: "view", view: "rainy" };
    case "2":
      return { kind: "view", view: "clean" };
    case "3":
      return { kind: "view", view: "aligned" };
    case "4":
      return { kind: "view", view: "blend" };
    case "5":
      return { kind: "view", view: "diff" };
    case "v":
      return { kind: "cycle", direction: 1 };
    case "V":
      return { kind: "cycle", direction: -1 };
    case "b":
      return { kind: "blink" };
    case "a":
      return { kind: "accept" };
    case "r":
      return { kind: "reject" };
    case "u":
      return { kind: "retry" };
    case "l":
      return { kind: "reload" };
    case "i":
      return { kind: "focus-note" };
    default:
      return null;
  }
}
