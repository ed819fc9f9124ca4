import type { PairRecord, PairsPage, Stats, ViewName } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** HTTP-level failure: the server answered, but with an error status. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin typed wrapper over the review API. All pixels stay server-side:
 *  the client only ever hands out image URLs, never decodes or edits them. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.text();
    if (!response.ok) {
      let message = body;
      try {
        const parsed = JSON.parse(body) as { error?: string };
        if (parsed.error) message = parsed.error;
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(response.status, message);
    }
    return JSON.parse(body) as T;
  }

  listPairs(status?: string, page = 0, pageSize = 50): Promise<PairsPage> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    if (status) params.set("status", status);
    return this.requestJson<PairsPage>(`/api/pairs?${params.toString()}`);
  }

  /** Every record, paging until the server runs dry. */
  async listAllPairs(status?: string): Promise<PairRecord[]> {
    const pageSize = 200;
    const all: PairRecord[] = [];
    for (let page = 0; ; page += 1) {
      const chunk = await this.listPairs(status, page, pageSize);
      all.push(...chunk.pairs);
      if (all.length >= chunk.total || chunk.pairs.length === 0) break;
    }
    return all;
  }

  imageUrl(pairId: string, view: ViewName): string {
    return `${this.baseUrl}/api/pairs/${encodeURIComponent(pairId)}/image?view=${view}`;
  }

  submitReview(pairId: string, decision: "accept" | "reject", note: string): Promise<PairRecord> {
    return this.requestJson<PairRecord>(`/api/pairs/${encodeURIComponent(pairId)}/review`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ decision, note }),
    });
  }

  stats(): Promise<Stats> {
    return this.requestJson<Stats>("/api/stats");
  }
}
