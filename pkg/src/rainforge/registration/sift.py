"""Scale-invariant keypoint detection and description.

Difference-of-Gaussian extrema over a Gaussian scale-space pyramid, with
subpixel refinement, contrast and edge-response rejection, gradient-histogram
orientation assignment, and 4x4x8 gradient descriptors (128-D, L2-normalized,
entries clamped at 0.2, renormalized).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..imaging import ImageBuffer
from ..imaging.ops import gaussian_blur_array

__all__ = ["Keypoint", "SiftParams", "detect_keypoints"]

_DESCRIPTOR_BINS = 8
_DESCRIPTOR_GRID = 4
_ORI_BINS = 36
_ORI_PEAK_RATIO = 0.8
_ORI_SIGMA_FACTOR = 1.5
_DESCR_SCALE_FACTOR = 3.0
_DESCR_CLAMP = 0.2


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    scale: float
    orientation: float
    response: float
    descriptor: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SiftParams:
    octaves: int = 4
    scales_per_octave: int = 3
    sigma: float = 1.6
    assumed_blur: float = 0.5
    contrast_threshold: float = 0.03
    edge_ratio: float = 10.0
    max_keypoints: int = 2000


def detect_keypoints(img: ImageBuffer, params: SiftParams = SiftParams()):
    """Detect scale-space keypoints on a grayscale image.

    Returns a list of Keypoint sorted by descending response. An image with
    no extrema (e.g. a constant image) yields an empty list.
    """
    if img.channels != 1:
        raise ValueError("keypoint detection expects a grayscale image")
    if img.height < 32 or img.width < 32:
        raise ValueError(f"image too small for scale-space detection: {img.width}x{img.height}")

    base = img.plane(0).astype(np.float64)
    gauss_pyr, dog_pyr = _build_pyramids(base, params)

    keypoints = []
    for octave, dogs in enumerate(dog_pyr):
        candidates = _find_extrema(dogs, params)
        for level, y, x in candidates:
            refined = _refine_candidate(dogs, level, y, x, params)
            if refined is None:
                continue
            lvl_f, yy, xx, response = refined
            scale_in_octave = params.sigma * (2.0 ** (lvl_f / params.scales_per_octave))
            gauss_level = int(np.clip(round(lvl_f), 1, params.scales_per_octave))
            gimg = gauss_pyr[octave][gauss_level]
            for theta in _orientations(gimg, xx, yy, scale_in_octave):
                desc = _descriptor(gimg, xx, yy, scale_in_octave, theta)
                if desc is None:
                    continue
                factor = 2.0**octave
                keypoints.append(
                    Keypoint(
                        x=xx * factor,
                        y=yy * factor,
                        scale=scale_in_octave * factor,
                        orientation=theta,
                        response=abs(response),
                        descriptor=desc,
                    )
                )

    keypoints.sort(key=lambda k: (-k.response, k.x, k.y, k.orientation))
    return keypoints[: params.max_keypoints]


def _build_pyramids(base: np.ndarray, params: SiftParams):
    """Gaussian and difference-of-Gaussian pyramids, one row per octave."""
    s = params.scales_per_octave
    k = 2.0 ** (1.0 / s)
    levels = s + 3

    extra = math.sqrt(max(params.sigma**2 - params.assumed_blur**2, 0.01))
    current = gaussian_blur_array(base, extra)

    gauss_pyr = []
    dog_pyr = []
    for octave in range(params.octaves):
        if min(current.shape) < 16:
            break
        images = [current]
        for lvl in range(1, levels):
            prev_sigma = params.sigma * k ** (lvl - 1)
            inc = prev_sigma * math.sqrt(k**2 - 1.0)
            images.append(gaussian_blur_array(images[-1], inc))
        gauss_pyr.append(images)
        dogs = np.stack([images[i + 1] - images[i] for i in range(levels - 1)])
        dog_pyr.append(dogs)
        current = images[s][::2, ::2]
    return gauss_pyr, dog_pyr


def _find_extrema(dogs: np.ndarray, params: SiftParams):
    """Coordinates (level, y, x) of 26-neighborhood extrema above a floor threshold."""
    floor = 0.5 * params.contrast_threshold
    maxed = ndimage.maximum_filter(dogs, size=3, mode="constant", cval=-np.inf)
    minned = ndimage.minimum_filter(dogs, size=3, mode="constant", cval=np.inf)
    is_ext = ((dogs == maxed) | (dogs == minned)) & (np.abs(dogs) > floor)
    is_ext[0] = is_ext[-1] = False
    is_ext[:, :2, :] = is_ext[:, -2:, :] = False
    is_ext[:, :, :2] = is_ext[:, :, -2:] = False
    return np.argwhere(is_ext)


def _refine_candidate(dogs: np.ndarray, level: int, y: int, x: int, params: SiftParams):
    """Quadratic subpixel refinement; returns (level, y, x, contrast) or None."""
    levels, h, w = dogs.shape
    for _ in range(5):
        d = dogs[level - 1 : level + 2, y - 1 : y + 2, x - 1 : x + 2]
        grad = 0.5 * np.array(
            [
                d[1, 1, 2] - d[1, 1, 0],
                d[1, 2, 1] - d[1, 0, 1],
                d[2, 1, 1] - d[0, 1, 1],
            ]
        )
        dxx = d[1, 1, 2] - 2 * d[1, 1, 1] + d[1, 1, 0]
        dyy = d[1, 2, 1] - 2 * d[1, 1, 1] + d[1, 0, 1]
        dss = d[2, 1, 1] - 2 * d[1, 1, 1] + d[0, 1, 1]
        dxy = 0.25 * (d[1, 2, 2] - d[1, 2, 0] - d[1, 0, 2] + d[1, 0, 0])
        dxs = 0.25 * (d[2, 1, 2] - d[2, 1, 0] - d[0, 1, 2] + d[0, 1, 0])
        dys = 0.25 * (d[2, 2, 1] - d[2, 0, 1] - d[0, 2, 1] + d[0, 0, 1])
        hess = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
        try:
            offset = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return None
        if np.all(np.abs(offset) < 0.5):
            break
        x += int(round(float(np.clip(offset[0], -1, 1))))
        y += int(round(float(np.clip(offset[1], -1, 1))))
        level += int(round(float(np.clip(offset[2], -1, 1))))
        if not (1 <= level <= levels - 2 and 2 <= y < h - 2 and 2 <= x < w - 2):
            return None
    else:
        return None

    contrast = d[1, 1, 1] + 0.5 * float(grad @ offset)
    if abs(contrast) < params.contrast_threshold:
        return None

    # principal-curvature (edge response) rejection on the spatial Hessian
    tr = dxx + dyy
    det = dxx * dyy - dxy**2
    r = params.edge_ratio
    if det <= 0 or tr**2 * r >= (r + 1) ** 2 * det:
        return None

    return level + float(offset[2]), y + float(offset[1]), x + float(offset[0]), contrast


def _gradient_patch(gimg: np.ndarray, cx: float, cy: float, radius: int):
    """Gradient magnitude/orientation and offsets on a window around (cx, cy)."""
    h, w = gimg.shape
    xi, yi = int(round(cx)), int(round(cy))
    x0, x1 = max(xi - radius, 1), min(xi + radius, w - 2)
    y0, y1 = max(yi - radius, 1), min(yi + radius, h - 2)
    if x1 < x0 or y1 < y0:
        return None
    region = gimg[y0 - 1 : y1 + 2, x0 - 1 : x1 + 2]
    dx = 0.5 * (region[1:-1, 2:] - region[1:-1, :-2])
    dy = 0.5 * (region[2:, 1:-1] - region[:-2, 1:-1])
    mag = np.hypot(dx, dy)
    ang = np.arctan2(dy, dx)
    ys, xs = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
    return mag, ang, xs - cx, ys - cy


def _orientations(gimg: np.ndarray, cx: float, cy: float, scale: float):
    """Dominant gradient orientations from a 36-bin weighted histogram."""
    sigma = _ORI_SIGMA_FACTOR * scale
    radius = int(round(3.0 * sigma))
    patch = _gradient_patch(gimg, cx, cy, radius)
    if patch is None:
        return []
    mag, ang, off_x, off_y = patch
    weight = np.exp(-(off_x**2 + off_y**2) / (2.0 * sigma**2))
    bins = np.floor((ang + np.pi) / (2 * np.pi) * _ORI_BINS).astype(int) % _ORI_BINS
    hist = np.bincount(bins.ravel(), weights=(weight * mag).ravel(), minlength=_ORI_BINS)

    # circular smoothing, twice, with a [1 4 6 4 1]/16 kernel
    for _ in range(2):
        padded = np.concatenate([hist[-2:], hist, hist[:2]])
        hist = np.convolve(padded, np.array([1, 4, 6, 4, 1]) / 16.0, mode="same")[2:-2]

    peak = hist.max()
    if peak <= 0:
        return []
    result = []
    for b in range(_ORI_BINS):
        prev_v = hist[(b - 1) % _ORI_BINS]
        next_v = hist[(b + 1) % _ORI_BINS]
        if hist[b] >= _ORI_PEAK_RATIO * peak and hist[b] > prev_v and hist[b] > next_v:
            denom = prev_v - 2 * hist[b] + next_v
            shift = 0.0 if abs(denom) < 1e-12 else 0.5 * (prev_v - next_v) / denom
            center = (b + shift + 0.5) / _ORI_BINS * 2 * np.pi - np.pi
            result.append(float(center))
    return result


def _descriptor(gimg: np.ndarray, cx: float, cy: float, scale: float, theta: float):
    """4x4 spatial x 8 orientation gradient histogram with trilinear binning."""
    grid = _DESCRIPTOR_GRID
    nbins = _DESCRIPTOR_BINS
    hist_width = _DESCR_SCALE_FACTOR * scale
    radius = int(round(hist_width * math.sqrt(2) * (grid + 1) * 0.5))
    patch = _gradient_patch(gimg, cx, cy, radius)
    if patch is None:
        return None
    mag, ang, off_x, off_y = patch

    cos_t, sin_t = math.cos(theta), math.sin(theta)
    # rotate offsets into the keypoint frame and express in histogram cells
    r_rot = (-sin_t * off_x + cos_t * off_y) / hist_width
    c_rot = (cos_t * off_x + sin_t * off_y) / hist_width
    rbin = r_rot + grid / 2 - 0.5
    cbin = c_rot + grid / 2 - 0.5

    inside = (rbin > -1) & (rbin < grid) & (cbin > -1) & (cbin < grid)
    if not inside.any():
        return None
    rbin, cbin = rbin[inside], cbin[inside]
    mag_i, ang_i = mag[inside], ang[inside]
    r_rot, c_rot = r_rot[inside], c_rot[inside]

    weight = np.exp(-(r_rot**2 + c_rot**2) / (0.5 * grid**2))
    obin = (ang_i - theta) / (2 * np.pi) * nbins

    hist = np.zeros((grid + 2, grid + 2, nbins))
    r0 = np.floor(rbin).astype(int)
    c0 = np.floor(cbin).astype(int)
    o0 = np.floor(obin).astype(int)
    fr = rbin - r0
    fc = cbin - c0
    fo = obin - o0
    o0 = o0 % nbins
    value = weight * mag_i

    for dr in (0, 1):
        wr = value * (fr if dr else 1 - fr)
        for dc in (0, 1):
            wc = wr * (fc if dc else 1 - fc)
            for do in (0, 1):
                wo = wc * (fo if do else 1 - fo)
                np.add.at(hist, (r0 + dr + 1, c0 + dc + 1, (o0 + do) % nbins), wo)

    desc = hist[1 : grid + 1, 1 : grid + 1, :].ravel()
    norm = np.linalg.norm(desc)
    if norm < 1e-12:
        return None
    desc = desc / norm
    np.clip(desc, None, _DESCR_CLAMP, out=desc)
    norm = np.linalg.norm(desc)
    if norm < 1e-12:
        return None
    return desc / norm
