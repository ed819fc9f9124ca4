import type { ReviewController } from "./controller.js";
import type { MetricStamp, PairRecord } from "./types.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function formatPsnr(value: MetricStamp["psnr_db"]): string {
  if (value === null || value === undefined) return "n/a";
  if (value === "inf") return "∞";
  return `${value.toFixed(2)} dB`;
}

function metricsLine(label: string, stamp: MetricStamp | null | undefined): string {
  if (!stamp) return `<div class="metrics">${label}: n/a</div>`;
  const ssim = stamp.ssim === null || stamp.ssim === undefined ? "n/a" : stamp.ssim.toFixed(4);
  const ms = stamp.ms_ssim === null || stamp.ms_ssim === undefined ? "n/a" : stamp.ms_ssim.toFixed(4);
  return `<div class="metrics">${label}: PSNR ${formatPsnr(stamp.psnr_db)} · SSIM ${ssim} · MS-SSIM ${ms}</div>`;
}

export function renderPairPanel(record: PairRecord | null): string {
  if (!record) {
    return `<div class="empty">No pair selected.</div>`;
  }
  const diagnostics = (record.diagnostics ?? [])
    .map((d) => `<li>${escapeHtml(d)}</li>`)
    .join("");
  const review = record.review
    ? `<div class="review">review: ${record.review.decision} — ${escapeHtml(record.review.note)}</div>`
    : "";
  return [
    `<div class="pair-id">${escapeHtml(record.pair_id)} <span class="status ${record.status}">${record.status}</span></div>`,
    `<div class="mode">correction: ${escapeHtml(record.correction_mode ?? "none")}</div>`,
    metricsLine("pre", record.metrics_pre),
    metricsLine("post", record.metrics),
    review,
    diagnostics ? `<ul class="diagnostics">${diagnostics}</ul>` : "",
  ].join("\n");
}

export function renderStatusBar(controller: ReviewController): string {
  const parts: string[] = [];
  if (controller.offlineBanner) {
    parts.push(`<span class="banner offline">offline — decisions are queued, press u to retry</span>`);
  }
  const record = controller.current();
  if (record) {
    parts.push(
      `<span class="position">${controller.queue.index + 1}/${controller.queue.length}</span>`,
    );
    parts.push(`<span class="view">view: ${controller.views.displayed()}${controller.views.blinking ? " (blink)" : ""}</span>`);
  }
  if (controller.message) {
    parts.push(`<span class="message">${escapeHtml(controller.message)}</span>`);
  }
  if (controller.outbox.size > 0) {
    parts.push(`<span class="outbox">queued: ${controller.outbox.size}</span>`);
  }
  return parts.join(" ");
}

export const KEY_HELP = [
  "j/→ next · k/← previous",
  "1 rainy · 2 clean · 3 aligned · 4 blend · 5 diff · v cycle",
  "b blink rainy/aligned",
  "a accept · r reject · i note",
  "u retry queued · l reload queue",
].join("  |  ");
