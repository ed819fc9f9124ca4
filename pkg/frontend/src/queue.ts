import type { ApiClient } from "./client.js";
import type { PairRecord } from "./types.js";

/** Reviewable pairs in working order: needs_review first, then pending,
 *  stable within each group by server order. */
export function orderQueue(records: PairRecord[]): PairRecord[] {
  const needsReview = records.filter((r) => r.status === "needs_review");
  const pending = records.filter((r) => r.status === "pending");
  return [...needsReview, ...pending];
}

export class ReviewQueue {
  private items: PairRecord[] = [];
  private position = 0;

  async load(client: ApiClient): Promise<void> {
    const records = await client.listAllPairs();
    this.items = orderQueue(records);
    this.position = Math.min(this.position, Math.max(this.items.length - 1, 0));
  }

  get length(): number {
    return this.items.length;
  }

  get index(): number {
    return this.position;
  }

  get isEmpty(): boolean {
    return this.items.length === 0;
  }

  current(): PairRecord | null {
    return this.items[this.position] ?? null;
  }

  /** Stable empty tail: paging past the end yields [] forever. */
  page(page: number, pageSize: number): PairRecord[] {
    const start = page * pageSize;
    if (start >= this.items.length) return [];
    return this.items.slice(start, start + pageSize);
  }

  advance(): PairRecord | null {
    if (this.position < this.items.length - 1) {
      this.position += 1;
    } else {
      this.position = this.items.length; // walked off the end: queue done
    }
    return this.current();
  }

  back(): PairRecord | null {
    this.position = Math.max(this.position - 1, 0);
    return this.current();
  }

  /** Drop a pair that is no longer reviewable (e.g. just decided). When the
   *  current pair is removed, the next one slides into its place. */
  remove(pairId: string): void {
    const idx = this.items.findIndex((r) => r.pair_id === pairId);
    if (idx === -1) return;
    this.items.splice(idx, 1);
    if (this.position > idx) this.position -= 1;
    if (this.position >= this.items.length) this.position = Math.max(this.items.length - 1, 0);
  }
}
