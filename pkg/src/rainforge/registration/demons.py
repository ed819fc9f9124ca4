"""Elastic registration: additive demons with dual Gaussian regularization.

Estimates a dense displacement field mapping the moving image onto the fixed
image, driven by intensity differences and the fixed image's gradients. Runs
coarse to fine over a 3-level pyramid (x4, x2, x1), which suits the few-pixel
local motions this toolkit corrects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..imaging import DisplacementField, ImageBuffer
from ..imaging.ops import bilinear_sample_plane, gaussian_blur_array

__all__ = ["DemonsParams", "register_elastic"]

_DENOM_GUARD = 1e-10


@dataclass(frozen=True)
class DemonsParams:
    iterations: int = 200
    field_smoothing_sigma: float = 2.0
    update_smoothing_sigma: float = 1.0
    max_step: float = 2.0
    stop_tolerance: float = 0.01
    pyramid_levels: int = 3

    def __post_init__(self):
        for name in ("iterations", "field_smoothing_sigma", "update_smoothing_sigma", "max_step", "stop_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.stop_tolerance >= self.max_step:
            raise ValueError("stop_tolerance must be below max_step")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be >= 1")


def register_elastic(
    moving: ImageBuffer,
    fixed: ImageBuffer,
    params: DemonsParams = DemonsParams(),
    step_trace: list | None = None,
) -> DisplacementField:
    """Displacement field d such that moving(p + d(p)) approximates fixed(p).

    `step_trace`, when given, collects the max applied step magnitude of each
    iteration (all pyramid levels), for verifying the step cap.
    """
    if moving.channels != 1 or fixed.channels != 1:
        raise ValueError("elastic registration expects grayscale images")
    if moving.data.shape != fixed.data.shape:
        raise ValueError("moving and fixed dimensions differ")

    mov = moving.plane(0).astype(np.float64)
    fix = fixed.plane(0).astype(np.float64)

    pyramid = [(mov, fix)]
    for _ in range(params.pyramid_levels - 1):
        m, f = pyramid[-1]
        if min(m.shape) < 16:
            break
        pyramid.append((_downsample2(m), _downsample2(f)))
    pyramid.reverse()  # coarsest first

    field = np.zeros(pyramid[0][0].shape + (2,))
    for m, f in pyramid:
        if field.shape[:2] != m.shape:
            field = _upsample_field(field, m.shape)
        field = _demons_level(m, f, field, params, step_trace)

    return DisplacementField(field)


def _demons_level(
    mov: np.ndarray,
    fix: np.ndarray,
    field: np.ndarray,
    params: DemonsParams,
    step_trace: list | None = None,
) -> np.ndarray:
    grad_y, grad_x = np.gradient(fix)
    grad_sq = grad_x**2 + grad_y**2

    for _ in range(params.iterations):
        warped, valid = _warp_plane(mov, field)
        diff = fix - warped
        denom = grad_sq + diff**2
        safe = (denom >= _DENOM_GUARD) & valid
        scale = np.where(safe, diff / np.where(safe, denom, 1.0), 0.0)
        update = np.stack([scale * grad_x, scale * grad_y], axis=2)

        update[:, :, 0] = gaussian_blur_array(update[:, :, 0], params.update_smoothing_sigma)
        update[:, :, 1] = gaussian_blur_array(update[:, :, 1], params.update_smoothing_sigma)

        magnitude = np.hypot(update[:, :, 0], update[:, :, 1])
        over = magnitude > params.max_step
        if over.any():
            shrink = np.where(over, params.max_step / np.maximum(magnitude, 1e-30), 1.0)
            update *= shrink[:, :, None]
            magnitude = np.minimum(magnitude, params.max_step)

        if step_trace is not None:
            step_trace.append(float(magnitude.max()))

        field = field + update
        field[:, :, 0] = gaussian_blur_array(field[:, :, 0], params.field_smoothing_sigma)
        field[:, :, 1] = gaussian_blur_array(field[:, :, 1], params.field_smoothing_sigma)

        if float(magnitude.mean()) < params.stop_tolerance:
            break
    return field


def _warp_plane(plane: np.ndarray, field: np.ndarray):
    h, w = plane.shape
    ys, xs = np.mgrid[0:h, 0:w]
    sx = xs + field[:, :, 0]
    sy = ys + field[:, :, 1]
    return bilinear_sample_plane(plane, sx, sy)


def _downsample2(plane: np.ndarray) -> np.ndarray:
    smoothed = gaussian_blur_array(plane, 1.0)
    return smoothed[::2, ::2]


def _upsample_field(field: np.ndarray, shape) -> np.ndarray:
    """Bilinearly resize a coarse field to `shape`, doubling the vectors."""
    h, w = shape
    ch, cw = field.shape[:2]
    ys = np.linspace(0, ch - 1, h)
    xs = np.linspace(0, cw - 1, w)
    grid_y, grid_x = np.meshgrid(ys, xs, indexing="ij")
    out = np.zeros((h, w, 2))
    for c in range(2):
        values, _ = bilinear_sample_plane(field[:, :, c], grid_x, grid_y)
        out[:, :, c] = 2.0 * values
    return out
