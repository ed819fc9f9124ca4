import { VIEWS, type ViewName } from "./types.js";

export type Scheduler = {
  setInterval(fn: () => void, ms: number): number;
  clearInterval(handle: number): void;
};

const realScheduler: Scheduler = {
  setInterval: (fn, ms) => setInterval(fn, ms) as unknown as number,
  clearInterval: (handle) => clearInterval(handle),
};

/** Which of the five server-rendered views is on screen, plus blink mode,
 *  which alternates rainy/aligned at a fixed interval for motion checking. */
export class ViewState {
  active: ViewName = "blend"; // default comparison view
  private blinkHandle: number | null = null;
  private blinkPhase: 0 | 1 = 0;
  private listeners: Array<() => void> = [];

  constructor(private readonly scheduler: Scheduler = realScheduler) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get blinking(): boolean {
    return this.blinkHandle !== null;
  }

  /** The view whose URL should be displayed right now. */
  displayed(): ViewName {
    if (this.blinkHandle !== null) {
      return this.blinkPhase === 0 ? "rainy" : "aligned";
    }
    return this.active;
  }

  set(view: ViewName): void {
    this.stopBlink();
    this.active = view;
    this.notify();
  }

  cycle(direction: 1 | -1 = 1): ViewName {
    this.stopBlink();
    const idx = VIEWS.indexOf(this.active);
    this.active = VIEWS[(idx + direction + VIEWS.length) % VIEWS.length];
    this.notify();
    return this.active;
  }

  startBlink(intervalMs = 500): void {
    this.stopBlink();
    this.blinkPhase = 0;
    this.blinkHandle = this.scheduler.setInterval(() => {
      this.blinkPhase = this.blinkPhase === 0 ? 1 : 0;
      this.notify();
    }, intervalMs);
    this.notify();
  }

  stopBlink(): void {
    if (this.blinkHandle !== null) {
      this.scheduler.clearInterval(this.blinkHandle);
      this.blinkHandle = null;
    }
  }

  toggleBlink(intervalMs = 500): void {
    if (this.blinkHandle !== null) {
      this.stopBlink();
      this.notify();
    } else {
      this.startBlink(intervalMs);
    }
  }
}
