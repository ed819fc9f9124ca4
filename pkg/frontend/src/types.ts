export type PairStatus = "pending" | "auto_rejected" | "needs_review" | "accepted" | "rejected";

export type ViewName = "rainy" | "clean" | "aligned" | "blend" | "diff";

export const VIEWS: ViewName[] = ["rainy", "clean", "aligned", "blend", "diff"];

export interface MetricStamp {
  psnr_db: number | "inf" | null;
  ssim: number | null;
  ms_ssim: number | null;
}

export interface ReviewStamp {
  decision: "accept" | "reject";
  note: string;
  decided_at: string;
}

export interface PairRecord {
  pair_id: string;
  scene?: string;
  status: PairStatus;
  correction_mode?: string;
  metrics?: MetricStamp | null;
  metrics_pre?: MetricStamp | null;
  review?: ReviewStamp | null;
  diagnostics?: string[];
}

export interface PairsPage {
  pairs: PairRecord[];
  page: number;
  page_size: number;
  total: number;
}

export interface Stats {
  counts: Record<string, number>;
  total: number;
}
