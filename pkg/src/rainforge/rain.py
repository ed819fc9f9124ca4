"""Synthetic rain: streak layers, additive compositing, and veiling.

The rainy frame is the clean frame plus one or more additive streak layers;
dense-rain veiling is a separate alpha blend toward an airlight color. These
generators feed the end-to-end alignment harnesses and sim2real comparisons,
so every sampled parameter lands in a provenance record and everything is
deterministic under its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .imaging import DisplacementField, Homography, ImageBuffer
from .imaging.ops import gaussian_blur_array, warp_displacement, warp_homography

__all__ = [
    "StreakLayer",
    "StreakParams",
    "VeilParams",
    "CompositeResult",
    "render_streak_layer",
    "composite_rain",
    "apply_veiling",
    "synthesize_pair",
]


@dataclass(frozen=True)
class StreakLayer:
    """Additive radiance of one rain layer; nonnegative, same size as its target."""

    intensity: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.intensity, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("streak layer must be a 2-D intensity map")
        if not np.all(np.isfinite(arr)) or arr.min() < 0:
            raise ValueError("streak intensities must be finite and nonnegative")
        out = np.ascontiguousarray(arr)
        out.flags.writeable = False
        object.__setattr__(self, "intensity", out)

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def width(self) -> int:
        return self.intensity.shape[1]

    def energy(self) -> float:
        return float(self.intensity.sum())


@dataclass(frozen=True)
class StreakParams:
    width: int
    height: int
    count: int = 60
    length_range: tuple = (8.0, 28.0)
    width_range: tuple = (0.6, 1.6)
    angle_range: tuple = (-0.25, 0.25)  # radians from vertical
    opacity_range: tuple = (0.15, 0.6)
    blur_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("layer dimensions must be positive")
        if self.count < 0:
            raise ValueError("count must be >= 0")
        for name in ("length_range", "width_range", "angle_range", "opacity_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} is empty")
        if not (0 <= self.opacity_range[0] and self.opacity_range[1] <= 1):
            raise ValueError("opacity_range must lie in [0, 1]")
        if self.blur_sigma < 0:
            raise ValueError("blur_sigma must be >= 0")


@dataclass(frozen=True)
class VeilParams:
    strength: float = 0.0
    airlight: tuple = (0.85, 0.85, 0.85)

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError("strength must lie in [0, 1]")
        if any(not 0.0 <= v <= 1.0 for v in self.airlight):
            raise ValueError("airlight must lie in [0, 1] per channel")


class CompositeResult(NamedTuple):
    image: ImageBuffer
    saturated_pixels: int


def _segment_coverage(height, width, p0, p1, half_width, opacity) -> np.ndarray:
    """Anti-aliased coverage of a capsule (segment with round caps) of the
    given half width: coverage = clamp(half_width + 0.5 - distance, 0, 1)."""
    x0, y0 = p0
    x1, y1 = p1
    pad = int(math.ceil(half_width + 1.5))
    bx0 = max(int(math.floor(min(x0, x1))) - pad, 0)
    bx1 = min(int(math.ceil(max(x0, x1))) + pad, width - 1)
    by0 = max(int(math.floor(min(y0, y1))) - pad, 0)
    by1 = min(int(math.ceil(max(y0, y1))) + pad, height - 1)
    out = np.zeros((height, width))
    if bx1 < bx0 or by1 < by0:
        return out

    ys, xs = np.mgrid[by0 : by1 + 1, bx0 : bx1 + 1].astype(float)
    vx, vy = x1 - x0, y1 - y0
    seg_len2 = vx * vx + vy * vy
    if seg_len2 == 0:
        dist = np.hypot(xs - x0, ys - y0)
    else:
        t = np.clip(((xs - x0) * vx + (ys - y0) * vy) / seg_len2, 0.0, 1.0)
        dist = np.hypot(xs - (x0 + t * vx), ys - (y0 + t * vy))
    coverage = np.clip(half_width + 0.5 - dist, 0.0, 1.0)
    out[by0 : by1 + 1, bx0 : bx1 + 1] = opacity * coverage
    return out


def render_streak_layer(params: StreakParams) -> StreakLayer:
    """Render `count` anti-aliased streak segments into one additive layer.

    Per streak, length/width/angle/opacity are sampled uniformly from the
    configured ranges; angle is measured from vertical so 0 means straight
    fall. A final Gaussian blur stands in for motion blur.
    """
    rng = np.random.default_rng(params.seed)
    layer = np.zeros((params.height, params.width))
    for _ in range(params.count):
        cx = rng.uniform(0, params.width - 1)
        cy = rng.uniform(0, params.height - 1)
        length = rng.uniform(*params.length_range)
        width = rng.uniform(*params.width_range)
        angle = rng.uniform(*params.angle_range)
        opacity = rng.uniform(*params.opacity_range)
        dx = math.sin(angle) * length / 2.0
        dy = math.cos(angle) * length / 2.0
        layer += _segment_coverage(
            params.height,
            params.width,
            (cx - dx, cy - dy),
            (cx + dx, cy + dy),
            half_width=width / 2.0,
            opacity=opacity,
        )
    if params.blur_sigma > 0:
        layer = gaussian_blur_array(layer, params.blur_sigma)
    return StreakLayer(np.clip(layer, 0.0, 1.0))


def composite_rain(clean: ImageBuffer, layers) -> CompositeResult:
    """Clean frame plus the sum of all streak layers, clamped to [0, 1].

    Streak radiance broadcasts across channels. The number of pixels that hit
    the clamp is reported so saturation loss is never silent.
    """
    acc = clean.data.astype(np.float64).copy()
    for layer in layers:
        if layer.height != clean.height or layer.width != clean.width:
            raise ValueError(
                f"layer {layer.width}x{layer.height} does not match image {clean.width}x{clean.height}"
            )
        acc += layer.intensity[:, :, None]
    saturated = int((acc > 1.0).any(axis=2).sum())
    return CompositeResult(ImageBuffer(np.clip(acc, 0.0, 1.0)), saturated)


def apply_veiling(img: ImageBuffer, veil: VeilParams) -> ImageBuffer:
    """Alpha blend toward the airlight: out = (1 - strength)*img + strength*airlight."""
    if veil.strength == 0.0:
        return img
    airlight = np.asarray(veil.airlight[: img.channels], dtype=np.float64)
    blended = (1.0 - veil.strength) * img.data + veil.strength * airlight[None, None, :]
    return ImageBuffer(np.clip(blended, 0.0, 1.0))


def synthesize_pair(
    clean: ImageBuffer,
    streaks: Optional[StreakParams] = None,
    veil: Optional[VeilParams] = None,
    warp: Optional[Homography] = None,
    field: Optional[DisplacementField] = None,
    n_layers: int = 1,
) -> tuple:
    """Build a (rainy, provenance) pair from a clean frame.

    The rainy frame optionally carries a geometric perturbation (camera or
    local motion between the two capture timestamps), then veiling, then
    n_layers streak layers seeded seed, seed+1, ... Clean is returned
    untouched by the caller; the provenance dict records every parameter.
    """
    provenance = {
        "n_layers": 0,
        "streaks": None,
        "veil": None,
        "warp": None,
        "field": "none",
        "saturated_pixels": 0,
    }
    rainy = clean
    if warp is not None:
        rainy, _ = warp_homography(rainy, warp)
        provenance["warp"] = [float(v) for v in warp.m.ravel()]
    if field is not None:
        rainy, _ = warp_displacement(rainy, field)
        provenance["field"] = "applied"
    if veil is not None:
        rainy = apply_veiling(rainy, veil)
        provenance["veil"] = {"strength": veil.strength, "airlight": list(veil.airlight)}
    if streaks is not None and n_layers > 0:
        layers = []
        seeds = []
        for i in range(n_layers):
            layer_params = StreakParams(
                width=streaks.width,
                height=streaks.height,
                count=streaks.count,
                length_range=streaks.length_range,
                width_range=streaks.width_range,
                angle_range=streaks.angle_range,
                opacity_range=streaks.opacity_range,
                blur_sigma=streaks.blur_sigma,
                seed=streaks.seed + i,
            )
            layers.append(render_streak_layer(layer_params))
            seeds.append(layer_params.seed)
        rainy, saturated = composite_rain(rainy, layers)
        provenance.update(
            {
                "n_layers": n_layers,
                "saturated_pixels": saturated,
                "streaks": {
                    "count": streaks.count,
                    "length_range": list(streaks.length_range),
                    "width_range": list(streaks.width_range),
                    "angle_range": list(streaks.angle_range),
                    "opacity_range": list(streaks.opacity_range),
                    "blur_sigma": streaks.blur_sigma,
                    "seeds": seeds,
                },
            }
        )
    return rainy, provenance
