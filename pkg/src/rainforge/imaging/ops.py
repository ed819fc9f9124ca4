"""Pure image operations: color, resampling, warping, blurring, mask cropping.

Pixel centers sit on integer coordinates, x along columns and y along rows.
Warps sample at the inverse-mapped location; anything outside the source
frame yields 0 and is flagged invalid in the returned mask, so downstream
metrics can exclude warp borders instead of letting them bias scores.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .buffer import DisplacementField, Homography, ImageBuffer, RegionMask

__all__ = [
    "to_grayscale",
    "warp_homography",
    "warp_displacement",
    "gaussian_blur",
    "gaussian_blur_array",
    "gaussian_kernel",
    "apply_mask_crop",
    "WarpResult",
    "CropResult",
]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class WarpResult(NamedTuple):
    image: ImageBuffer
    valid: RegionMask


class CropResult(NamedTuple):
    image: ImageBuffer
    mask: RegionMask


def bilinear_sample_plane(plane: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Bilinear sampling of a single (H, W) plane; returns (values, valid)."""
    values, valid = _sample(plane[:, :, None], xs, ys, "bilinear")
    return values[..., 0], valid


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """Collapse RGB to luminance: y = 0.299 r + 0.587 g + 0.114 b."""
    if img.channels != 3:
        raise ValueError(f"to_grayscale expects 3 channels, got {img.channels}")
    r, g, b = LUMA_WEIGHTS
    lum = r * img.plane(0) + g * img.plane(1) + b * img.plane(2)
    return ImageBuffer.clamped(lum)


def luminance_array(img: ImageBuffer) -> np.ndarray:
    """Luminance plane of an image, as a bare (H, W) array."""
    if img.channels == 1:
        return img.plane(0)
    r, g, b = LUMA_WEIGHTS
    return r * img.plane(0) + g * img.plane(1) + b * img.plane(2)


def _sample(arr: np.ndarray, xs: np.ndarray, ys: np.ndarray, interp: str):
    """Sample an (H, W, C) array at float coordinates; returns (values, valid)."""
    h, w = arr.shape[:2]
    valid = (xs >= 0.0) & (xs <= w - 1.0) & (ys >= 0.0) & (ys <= h - 1.0)

    if interp == "nearest":
        xi = np.floor(xs + 0.5).astype(np.int64)
        yi = np.floor(ys + 0.5).astype(np.int64)
        np.clip(xi, 0, w - 1, out=xi)
        np.clip(yi, 0, h - 1, out=yi)
        values = arr[yi, xi]
    elif interp == "bilinear":
        x0 = np.floor(xs).astype(np.int64)
        y0 = np.floor(ys).astype(np.int64)
        fx = xs - x0
        fy = ys - y0
        x0c = np.clip(x0, 0, w - 1)
        y0c = np.clip(y0, 0, h - 1)
        x1c = np.clip(x0 + 1, 0, w - 1)
        y1c = np.clip(y0 + 1, 0, h - 1)
        w00 = (1 - fx) * (1 - fy)
        w10 = fx * (1 - fy)
        w01 = (1 - fx) * fy
        w11 = fx * fy
        values = (
            arr[y0c, x0c] * w00[..., None]
            + arr[y0c, x1c] * w10[..., None]
            + arr[y1c, x0c] * w01[..., None]
            + arr[y1c, x1c] * w11[..., None]
        )
    else:
        raise ValueError(f"unknown interpolation '{interp}' (nearest or bilinear)")

    values = values * valid[..., None]
    return values, valid


def warp_homography(img: ImageBuffer, h: Homography, interp: str = "bilinear") -> WarpResult:
    """Resample so that output pixel p takes the value of the input at h^-1 p."""
    if h.is_identity():
        return WarpResult(img, RegionMask.full(img.height, img.width))
    hinv = h.inverse().m
    ys, xs = np.mgrid[0 : img.height, 0 : img.width]
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    sx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / denom
    sy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / denom
    values, valid = _sample(img.data, sx, sy, interp)
    return WarpResult(ImageBuffer.clamped(values), RegionMask(valid))


def warp_displacement(img: ImageBuffer, field: DisplacementField, interp: str = "bilinear") -> WarpResult:
    """Resample with output(p) = img(p + field(p))."""
    if field.height != img.height or field.width != img.width:
        raise ValueError(
            f"field dimensions {field.width}x{field.height} do not match image {img.width}x{img.height}"
        )
    if not field.vectors.any():
        return WarpResult(img, RegionMask.full(img.height, img.width))
    ys, xs = np.mgrid[0 : img.height, 0 : img.width]
    sx = xs + field.vectors[:, :, 0]
    sy = ys + field.vectors[:, :, 1]
    values, valid = _sample(img.data, sx, sy, interp)
    return WarpResult(ImageBuffer.clamped(values), RegionMask(valid))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian kernel with radius ceil(3*sigma), normalized to sum 1."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    if sigma == 0 or radius == 0:
        return np.array([1.0])
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur_array(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a 2-D or 3-D array, clamp-to-edge borders."""
    kernel = gaussian_kernel(sigma)
    if kernel.size == 1:
        return arr.astype(np.float64, copy=True)
    out = ndimage.correlate1d(arr.astype(np.float64), kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return out


def gaussian_blur(img: ImageBuffer, sigma: float) -> ImageBuffer:
    """Gaussian-blur an image; sigma 0 is the identity."""
    if sigma == 0:
        return img
    return ImageBuffer.clamped(gaussian_blur_array(img.data, sigma))


def apply_mask_crop(img: ImageBuffer, mask: RegionMask) -> CropResult:
    """Crop to the tight bounding box of the included region.

    Excluded pixels inside the box are zeroed; the cropped mask is returned
    alongside so callers can keep excluding them from metrics.
    """
    if mask.height != img.height or mask.width != img.width:
        raise ValueError(
            f"mask dimensions {mask.width}x{mask.height} do not match image {img.width}x{img.height}"
        )
    if not mask.included.any():
        raise ValueError("mask excludes every pixel; nothing to crop")
    rows = np.flatnonzero(mask.included.any(axis=1))
    cols = np.flatnonzero(mask.included.any(axis=0))
    y0, y1 = rows[0], rows[-1] + 1
    x0, x1 = cols[0], cols[-1] + 1
    sub_mask = mask.included[y0:y1, x0:x1]
    sub = img.data[y0:y1, x0:x1] * sub_mask[:, :, None]
    return CropResult(ImageBuffer(sub), RegionMask(sub_mask))


def crop_bounds(mask: RegionMask):
    """Tight bounding box (x, y, w, h) of a mask's included region."""
    if not mask.included.any():
        raise ValueError("mask excludes every pixel")
    rows = np.flatnonzero(mask.included.any(axis=1))
    cols = np.flatnonzero(mask.included.any(axis=0))
    return int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1)
