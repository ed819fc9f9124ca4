"""Full-reference image quality metrics: PSNR, SSIM, and multi-scale SSIM.

Color images are scored per channel and averaged. SSIM statistics come from
a Gaussian window evaluated only where the window fits entirely inside the
image, so small curation crops carry no boundary bias. The multi-scale score
multiplies per-scale contrast-structure terms and applies the luminance
comparison at the coarsest scale only; negative terms clamp to zero before
exponentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .imaging import ImageBuffer

__all__ = [
    "SsimParams",
    "MsSsimParams",
    "SsimResult",
    "psnr",
    "ssim",
    "ms_ssim",
    "metric_report",
    "PSNR_INFINITE",
]

# Sentinel for a zero-MSE comparison; compares greater than any finite dB value.
PSNR_INFINITE = math.inf

# Published default scale weights; they famously total 1.0001, so they are
# renormalized here to satisfy the sum-to-one contract exactly.
_RAW_MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass(frozen=True)
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    window_sigma: float = 1.5
    window_radius: int = 5
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")
        if self.window_radius < 1:
            raise ValueError("window_radius must be >= 1")


def _default_weights():
    total = sum(_RAW_MSSSIM_WEIGHTS)
    return tuple(w / total for w in _RAW_MSSSIM_WEIGHTS)


@dataclass(frozen=True)
class MsSsimParams:
    scale_weights: tuple = field(default_factory=_default_weights)
    ssim: SsimParams = field(default_factory=SsimParams)

    def __post_init__(self):
        if len(self.scale_weights) < 1:
            raise ValueError("need at least one scale")
        if any(w <= 0 for w in self.scale_weights):
            raise ValueError("scale weights must be positive")
        if abs(sum(self.scale_weights) - 1.0) > 1e-9:
            raise ValueError("scale weights must sum to 1")


class SsimResult(NamedTuple):
    score: float
    score_map: np.ndarray


def _check_pair(a: ImageBuffer, b: ImageBuffer):
    if a.data.shape != b.data.shape:
        raise ValueError(f"image shapes differ: {a.data.shape} vs {b.data.shape}")


def psnr(a: ImageBuffer, b: ImageBuffer, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE) over all channels; identical inputs give PSNR_INFINITE."""
    _check_pair(a, b)
    mse = float(((a.data - b.data) ** 2).mean())
    if mse == 0.0:
        return PSNR_INFINITE
    return 10.0 * math.log10(peak * peak / mse)


def _window_filter(plane: np.ndarray, kernel: np.ndarray, radius: int) -> np.ndarray:
    out = ndimage.correlate1d(plane, kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return out[radius:-radius, radius:-radius]


def _ssim_components(pa: np.ndarray, pb: np.ndarray, params: SsimParams):
    """Per-pixel luminance and contrast-structure comparison maps (valid region)."""
    radius = params.window_radius
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / params.window_sigma) ** 2)
    kernel /= kernel.sum()

    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2

    mu_a = _window_filter(pa, kernel, radius)
    mu_b = _window_filter(pb, kernel, radius)
    var_a = _window_filter(pa * pa, kernel, radius) - mu_a**2
    var_b = _window_filter(pb * pb, kernel, radius) - mu_b**2
    cov = _window_filter(pa * pb, kernel, radius) - mu_a * mu_b

    lum = (2 * mu_a * mu_b + c1) / (mu_a**2 + mu_b**2 + c1)
    cs = (2 * cov + c2) / (var_a + var_b + c2)
    return lum, cs


def ssim(a: ImageBuffer, b: ImageBuffer, params: SsimParams = SsimParams()) -> SsimResult:
    """Mean structural similarity and the per-pixel score map on the valid region."""
    _check_pair(a, b)
    side = 2 * params.window_radius + 1
    if a.height < side or a.width < side:
        raise ValueError(f"image smaller than the {side}x{side} SSIM window")

    maps = []
    for c in range(a.channels):
        lum, cs = _ssim_components(a.plane(c), b.plane(c), params)
        maps.append(lum * cs)
    score_map = np.mean(maps, axis=0)
    return SsimResult(score=float(score_map.mean()), score_map=score_map)


def _downsample2(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    h2, w2 = h // 2, w // 2
    trimmed = plane[: 2 * h2, : 2 * w2]
    return 0.25 * (trimmed[0::2, 0::2] + trimmed[0::2, 1::2] + trimmed[1::2, 0::2] + trimmed[1::2, 1::2])


def ms_ssim(a: ImageBuffer, b: ImageBuffer, params: MsSsimParams = MsSsimParams()) -> float:
    """Multi-scale SSIM score in [0, 1]."""
    _check_pair(a, b)
    n_scales = len(params.scale_weights)
    side = 2 * params.ssim.window_radius + 1
    if min(a.height, a.width) // (2 ** (n_scales - 1)) < side:
        raise ValueError(f"image too small for {n_scales} scales with a {side}x{side} window")

    scores = []
    for c in range(a.channels):
        pa = a.plane(c).astype(np.float64)
        pb = b.plane(c).astype(np.float64)
        result = 1.0
        for level, weight in enumerate(params.scale_weights):
            lum, cs = _ssim_components(pa, pb, params.ssim)
            if level == n_scales - 1:
                term = float((lum * cs).mean())
            else:
                term = float(cs.mean())
            result *= max(term, 0.0) ** weight
            if level < n_scales - 1:
                pa = _downsample2(pa)
                pb = _downsample2(pb)
        scores.append(result)
    return float(np.mean(scores))


def metric_report(a: ImageBuffer, b: ImageBuffer, region=None, peak: float = 1.0) -> dict:
    """JSON-ready metric bundle for a pair; region is the (x, y, w, h) scored area."""
    if region is None:
        region = (0, 0, a.width, a.height)
    psnr_db = psnr(a, b, peak=peak)
    return {
        "psnr_db": "inf" if math.isinf(psnr_db) else psnr_db,
        "ssim": ssim(a, b).score,
        "ms_ssim": ms_ssim(a, b),
        "region": {"x": region[0], "y": region[1], "w": region[2], "h": region[3]},
    }
