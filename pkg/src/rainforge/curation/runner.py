"""Per-pair curation: assess, crop, correct, measure, persist.

The clean frame is always the one warped onto the rainy frame's geometry, so
rain structure is never resampled. Every corrected pair routes to human
review; correction that fails or degrades alignment is surfaced through
diagnostics rather than silently accepted.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..imaging import ImageBuffer, RegionMask, load_image, load_mask, save_image, write_dfield
from ..imaging.ops import apply_mask_crop, crop_bounds, to_grayscale, warp_displacement, warp_homography
from ..metrics import MsSsimParams, SsimParams, ms_ssim, psnr, ssim
from ..registration import (
    DemonsParams,
    NoConsensusError,
    SiftParams,
    alignment_residual,
    detect_keypoints,
    estimate_homography_ransac,
    match_descriptors,
    register_elastic,
)
from .config import PipelineConfig
from .criteria import assess_criteria, select_correction
from .ingest import PairCandidate
from .manifest import SCHEMA_VERSION, append_record

__all__ = ["run_pair", "run_corpus", "pair_metrics"]

_MSSSIM_RAW_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


def _gray(img: ImageBuffer) -> ImageBuffer:
    return to_grayscale(img) if img.channels == 3 else img


def _scene_mask(scene: str, config: PipelineConfig, height: int, width: int) -> RegionMask:
    entry = config.masks.get(scene)
    if entry is None:
        return RegionMask.full(height, width)
    if isinstance(entry, str) and entry.lower().endswith(".png"):
        return load_mask(entry)
    # rectangle exclusion list: "x,y,w,h;x,y,w,h"
    rects = []
    for chunk in str(entry).split(";"):
        parts = [int(p) for p in chunk.split(",")]
        if len(parts) != 4:
            raise ValueError(f"bad mask rectangle for scene {scene!r}: {chunk!r}")
        rects.append(tuple(parts))
    return RegionMask.from_rectangles(height, width, rects)


def _valid_region(mask2d: np.ndarray):
    """Largest border-trimmed rectangle (x, y, w, h) valid in every row."""
    rows_any = mask2d.any(axis=1)
    if not rows_any.any():
        return None
    ys = np.flatnonzero(rows_any)
    y0, y1 = int(ys[0]), int(ys[-1])
    sub = mask2d[y0 : y1 + 1]
    first = sub.argmax(axis=1)
    last = sub.shape[1] - 1 - sub[:, ::-1].argmax(axis=1)
    x0 = int(first.max())
    x1 = int(last.min())
    if x1 < x0:
        return None
    return (x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def _region_view(img: ImageBuffer, region) -> ImageBuffer:
    x, y, w, h = region
    return ImageBuffer(img.data[y : y + h, x : x + w])


def _fitting_scales(height: int, width: int, window_side: int = 11, max_scales: int = 5) -> int:
    n = 1
    size = min(height, width)
    while n < max_scales and size // 2 >= window_side:
        size //= 2
        n += 1
    return n


def pair_metrics(rainy: ImageBuffer, clean: ImageBuffer, region) -> dict:
    """Metric stamp for a pair on a rectangular region, JSON-ready.

    Multi-scale SSIM drops to however many scales fit the region (weights
    renormalized); the scale count lands in the record.
    """
    a = _region_view(rainy, region)
    b = _region_view(clean, region)
    value = psnr(a, b)
    window = SsimParams()
    side = 2 * window.window_radius + 1
    out = {
        "psnr_db": "inf" if value == float("inf") else value,
        "region": {"x": region[0], "y": region[1], "w": region[2], "h": region[3]},
    }
    if min(a.height, a.width) < side:
        out["ssim"] = None
        out["ms_ssim"] = None
        out["ms_ssim_scales"] = 0
        return out
    out["ssim"] = ssim(a, b).score
    n_scales = _fitting_scales(a.height, a.width, side)
    raw = _MSSSIM_RAW_WEIGHTS[:n_scales]
    weights = tuple(w / sum(raw) for w in raw)
    out["ms_ssim"] = ms_ssim(a, b, MsSsimParams(scale_weights=weights))
    out["ms_ssim_scales"] = n_scales
    return out


def _mse_region(a: ImageBuffer, b: ImageBuffer, region) -> float:
    av = _region_view(a, region)
    bv = _region_view(b, region)
    return float(((av.data - bv.data) ** 2).mean())


def _estimate_homography(clean: ImageBuffer, rainy: ImageBuffer, config: PipelineConfig, diagnostics: list):
    sift_params = SiftParams(contrast_threshold=config.sift_contrast_threshold)
    try:
        kp_clean = detect_keypoints(_gray(clean), sift_params)
        kp_rainy = detect_keypoints(_gray(rainy), sift_params)
    except ValueError as exc:
        diagnostics.append(f"keypoint detection failed: {exc}")
        return None
    matches = match_descriptors(kp_clean, kp_rainy, ratio=config.match_ratio)
    if len(matches) < 4:
        diagnostics.append(f"only {len(matches)} descriptor matches; homography needs 4")
        return None
    try:
        result = estimate_homography_ransac(
            matches,
            inlier_threshold=config.ransac_inlier_threshold,
            max_iterations=config.ransac_max_iterations,
            confidence=config.ransac_confidence,
            seed=config.ransac_seed,
        )
    except (NoConsensusError, ValueError) as exc:
        diagnostics.append(f"no homography consensus: {exc}")
        return None
    diagnostics.append(
        f"homography: {result.inlier_count}/{len(matches)} inliers,"
        f" mean error {result.mean_reprojection_error:.3f}px"
    )
    return result.homography


def run_pair(pair: PairCandidate, config: PipelineConfig, manifest_path=None) -> dict:
    """Curate one ingested pair and return its manifest record.

    When `manifest_path` is given the record is appended there; image and
    field artifacts always land under config.output_root.
    """
    diagnostics: list = []
    rainy = load_image(pair.rainy_path)
    clean = load_image(pair.clean_path)

    record = {
        "v": SCHEMA_VERSION,
        "pair_id": pair.pair_id,
        "scene": pair.scene,
        "rainy_path": str(pair.rainy_path),
        "clean_path": str(pair.clean_path),
        "rainy_timestamp": pair.rainy_timestamp.isoformat() if pair.rainy_timestamp else None,
        "clean_timestamp": pair.clean_timestamp.isoformat() if pair.clean_timestamp else None,
        "thresholds": config.thresholds_dict(),
        "crop_region": None,
        "mask_ref": None,
        "criteria": None,
        "correction_mode": "none",
        "homography": None,
        "field_ref": None,
        "metrics_pre": None,
        "metrics": None,
        "processed_rainy": None,
        "processed_clean": None,
        "status": "pending",
        "review": None,
        "diagnostics": diagnostics,
    }

    if rainy.data.shape != clean.data.shape:
        diagnostics.append(
            f"dimension mismatch: rainy {rainy.width}x{rainy.height} vs clean {clean.width}x{clean.height}"
        )
        record["status"] = "auto_rejected"
        return _finish(record, manifest_path)

    report = assess_criteria(rainy, clean, pair.time_delta_minutes(), config)
    record["criteria"] = report.to_dict()

    hard_failures = []
    if not report.exposure_ok:
        hard_failures.append("exposure out of range")
    if report.timestamps_known and report.time_delta_minutes > config.max_time_delta_minutes:
        hard_failures.append(
            f"time delta {report.time_delta_minutes:.1f}min exceeds {config.max_time_delta_minutes}min"
        )
    if hard_failures:
        diagnostics.extend(hard_failures)
        record["status"] = "auto_rejected"
        return _finish(record, manifest_path)
    if not report.illumination_ok:
        diagnostics.append(
            f"illumination shift {report.illumination_shift:.4f} above {config.illumination}"
        )

    mask = _scene_mask(pair.scene, config, rainy.height, rainy.width)
    mask_entry = config.masks.get(pair.scene)
    if mask_entry is not None:
        record["mask_ref"] = str(mask_entry)
    record["crop_region"] = dict(zip(("x", "y", "w", "h"), crop_bounds(mask)))
    rainy_c, crop_mask = apply_mask_crop(rainy, mask)
    clean_c, _ = apply_mask_crop(clean, mask)

    full_region = (0, 0, rainy_c.width, rainy_c.height)
    record["metrics_pre"] = pair_metrics(rainy_c, clean_c, full_region)

    mode = select_correction(report, config)
    aligned = clean_c
    valid = RegionMask.full(rainy_c.height, rainy_c.width)
    correction = []

    if mode == "homography":
        homography = _estimate_homography(clean_c, rainy_c, config, diagnostics)
        if homography is None:
            record["status"] = "needs_review"
            record["metrics"] = record["metrics_pre"]
            return _finish(record, manifest_path)
        aligned, valid = warp_homography(clean_c, homography)
        record["homography"] = [float(v) for v in homography.m.ravel()]
        correction.append("homography")
        if min(aligned.height, aligned.width) >= config.block:
            residual = alignment_residual(rainy_c, aligned, block=config.block)
            diagnostics.append(
                f"post-homography residual: max block {residual.max_block_magnitude:.3f}px"
            )
            if residual.max_block_magnitude >= config.t_local:
                mode = "elastic"
            else:
                mode = "done"
        else:
            mode = "done"

    if mode == "elastic":
        params = DemonsParams(
            iterations=config.demons_iterations,
            field_smoothing_sigma=config.demons_field_sigma,
            update_smoothing_sigma=config.demons_update_sigma,
            max_step=config.demons_max_step,
            stop_tolerance=config.demons_stop_tolerance,
        )
        field = register_elastic(_gray(aligned), _gray(rainy_c), params)
        aligned, valid2 = warp_displacement(aligned, field)
        valid = valid.intersect(valid2)
        correction.append("elastic")
        field_rel = Path("artifacts") / f"{pair.pair_id}.dfield"
        write_dfield(field, config.output_root / field_rel)
        record["field_ref"] = str(field_rel)

    record["correction_mode"] = "+".join(correction) if correction else "none"

    region = _valid_region(valid.included & crop_mask.included)
    if region is None:
        diagnostics.append("no fully valid region after alignment")
        record["status"] = "needs_review"
        record["metrics"] = record["metrics_pre"]
        return _finish(record, manifest_path)

    record["metrics"] = pair_metrics(rainy_c, aligned, region)

    degraded = False
    if correction:
        mse_before = _mse_region(rainy_c, clean_c, region)
        mse_after = _mse_region(rainy_c, aligned, region)
        if mse_after > mse_before:
            degraded = True
            diagnostics.append(
                f"alignment degraded MSE: {mse_before:.6f} -> {mse_after:.6f}"
            )

    rel_rainy = Path("processed") / f"{pair.pair_id}_rainy.png"
    rel_clean = Path("processed") / f"{pair.pair_id}_clean.png"
    save_image(rainy_c, config.output_root / rel_rainy)
    save_image(aligned, config.output_root / rel_clean)
    record["processed_rainy"] = str(rel_rainy)
    record["processed_clean"] = str(rel_clean)

    if correction or degraded:
        record["status"] = "needs_review"
    elif config.auto_accept_uncorrected:
        record["status"] = "accepted"
        record["review"] = {
            "decision": "accept",
            "note": "auto-accepted: no correction required",
            "decided_at": "auto",
        }
    else:
        record["status"] = "pending"
    return _finish(record, manifest_path)


def _finish(record: dict, manifest_path) -> dict:
    if manifest_path is not None:
        append_record(manifest_path, record)
    return record


def run_corpus(config: PipelineConfig, candidates=None, errors=None) -> tuple:
    """Run the whole funnel over a corpus; returns (records, ingest errors)."""
    from .ingest import ingest_pairs

    if candidates is None:
        candidates, errors = ingest_pairs(config.rainy_dir, config.clean_dir, config.pairs_csv)
    errors = list(errors or [])
    manifest = config.manifest_path()
    records = []
    for pair in candidates:
        records.append(run_pair(pair, config, manifest_path=manifest))
    return records, errors
