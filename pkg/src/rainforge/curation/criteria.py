"""Collection-criteria assessment and correction-mode selection.

The assessment never rejects by itself; it produces a report of exposure,
noise, illumination, timing, and motion measurements. The pipeline turns the
report into auto-rejections, correction choices, and review routing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..imaging import ImageBuffer
from ..imaging.ops import luminance_array
from ..registration import MotionReport, alignment_residual
from .config import PipelineConfig

__all__ = ["CriteriaReport", "assess_criteria", "select_correction"]


@dataclass(frozen=True)
class CriteriaReport:
    exposure_ok: bool
    exposure: dict  # per-image mean/p1/p99 luminance
    noise_proxy: float
    illumination_shift: float
    illumination_per_channel: tuple
    illumination_ok: bool
    time_delta_minutes: float
    timestamps_known: bool
    motion: MotionReport

    def to_dict(self) -> dict:
        return {
            "exposure_ok": self.exposure_ok,
            "exposure": self.exposure,
            "noise_proxy": self.noise_proxy,
            "illumination_shift": self.illumination_shift,
            "illumination_per_channel": list(self.illumination_per_channel),
            "illumination_ok": self.illumination_ok,
            "time_delta_minutes": self.time_delta_minutes,
            "timestamps_known": self.timestamps_known,
            "motion": self.motion.to_dict(),
        }


def _exposure_stats(img: ImageBuffer) -> dict:
    lum = luminance_array(img)
    return {
        "mean": float(lum.mean()),
        "p1": float(np.percentile(lum, 1)),
        "p99": float(np.percentile(lum, 99)),
    }


def _exposure_passes(stats: dict, cfg: PipelineConfig) -> bool:
    return not (stats["p1"] > cfg.exposure_p1_max or stats["p99"] < cfg.exposure_p99_min)


def high_frequency_energy_ratio(img: ImageBuffer) -> float:
    """Fraction of spectral energy above three quarters of Nyquist."""
    lum = luminance_array(img)
    spectrum = np.abs(np.fft.fft2(lum)) ** 2
    fy = np.fft.fftfreq(lum.shape[0])[:, None]
    fx = np.fft.fftfreq(lum.shape[1])[None, :]
    radial = np.hypot(fy, fx)
    total = float(spectrum.sum())
    if total <= 0:
        return 0.0
    return float(spectrum[radial > 0.75 * 0.5].sum() / total)


def assess_criteria(
    rainy: ImageBuffer,
    clean: ImageBuffer,
    time_delta_minutes: float | None,
    config: PipelineConfig = PipelineConfig(),
) -> CriteriaReport:
    """Measure the collection criteria for one candidate pair."""
    exp_rainy = _exposure_stats(rainy)
    exp_clean = _exposure_stats(clean)
    exposure_ok = _exposure_passes(exp_rainy, config) and _exposure_passes(exp_clean, config)

    noise = max(high_frequency_energy_ratio(rainy), high_frequency_energy_ratio(clean))

    lum_delta = abs(float(luminance_array(rainy).mean()) - float(luminance_array(clean).mean()))
    per_channel = tuple(
        float(abs(rainy.plane(c).mean() - clean.plane(c).mean())) for c in range(min(rainy.channels, clean.channels))
    )

    motion = alignment_residual(rainy, clean, block=config.block)

    known = time_delta_minutes is not None
    return CriteriaReport(
        exposure_ok=exposure_ok,
        exposure={"rainy": exp_rainy, "clean": exp_clean},
        noise_proxy=noise,
        illumination_shift=lum_delta,
        illumination_per_channel=per_channel,
        illumination_ok=lum_delta <= config.illumination,
        time_delta_minutes=float(time_delta_minutes) if known else 0.0,
        timestamps_known=known,
        motion=motion,
    )


def select_correction(report: CriteriaReport, config: PipelineConfig = PipelineConfig()) -> str:
    """Correction mode implied by one motion report.

    Global shift at or above t_global demands a homography; otherwise local
    block motion at or above t_local demands elastic registration; otherwise
    nothing. (The pipeline re-assesses after a homography to decide whether
    elastic is additionally required.)
    """
    if report.motion.global_magnitude >= config.t_global:
        return "homography"
    if report.motion.max_block_magnitude >= config.t_local:
        return "elastic"
    return "none"
