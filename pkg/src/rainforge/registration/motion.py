"""Translation estimation via phase correlation, globally and per block.

The motion report quantifies how much residual camera or local motion a
frame pair carries, which drives the choice between no correction, a
homography, and elastic registration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..imaging import ImageBuffer
from ..imaging.ops import luminance_array

__all__ = ["MotionReport", "BlockShift", "alignment_residual", "phase_correlate"]


@dataclass(frozen=True)
class BlockShift:
    x: int
    y: int
    size: int
    shift: tuple  # (dx, dy) of the second image's block relative to the first

    @property
    def magnitude(self) -> float:
        return float(np.hypot(*self.shift))


@dataclass(frozen=True)
class MotionReport:
    global_shift: tuple
    block_shifts: list = field(default_factory=list)

    @property
    def global_magnitude(self) -> float:
        return float(np.hypot(*self.global_shift))

    @property
    def max_block_magnitude(self) -> float:
        if not self.block_shifts:
            return 0.0
        return max(b.magnitude for b in self.block_shifts)

    @property
    def mean_block_magnitude(self) -> float:
        if not self.block_shifts:
            return 0.0
        return float(np.mean([b.magnitude for b in self.block_shifts]))

    def to_dict(self) -> dict:
        return {
            "global_shift": [float(self.global_shift[0]), float(self.global_shift[1])],
            "global_magnitude": self.global_magnitude,
            "max_block_magnitude": self.max_block_magnitude,
            "mean_block_magnitude": self.mean_block_magnitude,
            "blocks": [
                {"x": b.x, "y": b.y, "size": b.size, "shift": [float(b.shift[0]), float(b.shift[1])]}
                for b in self.block_shifts
            ],
        }


def phase_correlate(a: np.ndarray, b: np.ndarray, window: bool = False):
    """Translation (dx, dy) such that b is a shifted by (+dx, +dy).

    Pure phase correlation with parabolic subpixel refinement around the
    peak. The refinement vanishes for exact cyclic integer shifts, so those
    come back exact.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("phase correlation inputs must share a shape")
    h, w = a.shape

    if window:
        wy = np.hanning(h)[:, None]
        wx = np.hanning(w)[None, :]
        taper = wy * wx
        a = (a - a.mean()) * taper
        b = (b - b.mean()) * taper

    fa = np.fft.fft2(a)
    fb = np.fft.fft2(b)
    cross = np.conj(fa) * fb
    mag = np.abs(cross)
    tiny = mag < 1e-12
    mag[tiny] = 1.0
    cross = cross / mag
    cross[tiny] = 0.0
    surface = np.real(np.fft.ifft2(cross))

    peak = np.unravel_index(int(np.argmax(surface)), surface.shape)
    py, px = int(peak[0]), int(peak[1])

    def parabolic(prev, center, nxt):
        denom = prev - 2.0 * center + nxt
        if abs(denom) < 1e-12:
            return 0.0
        offset = 0.5 * (prev - nxt) / denom
        if abs(offset) < 1e-9:  # FP noise around an exact integer peak
            return 0.0
        return float(np.clip(offset, -0.5, 0.5))

    off_x = parabolic(surface[py, (px - 1) % w], surface[py, px], surface[py, (px + 1) % w])
    off_y = parabolic(surface[(py - 1) % h, px], surface[py, px], surface[(py + 1) % h, px])

    dx = px + off_x
    dy = py + off_y
    if dx > w / 2:
        dx -= w
    if dy > h / 2:
        dy -= h
    return float(dx), float(dy)


def alignment_residual(a: ImageBuffer, b: ImageBuffer, block: int = 64) -> MotionReport:
    """Global and per-block translation estimates between two frames.

    Blocks tile the frame from the top-left corner; partial edge blocks are
    dropped. Block estimates use Hann windowing to suppress tile-boundary
    leakage; the global estimate does not, keeping integer shifts exact.
    """
    if a.data.shape != b.data.shape:
        raise ValueError("images must share dimensions")
    if a.height < block or a.width < block:
        raise ValueError(f"images smaller than one {block}px block")

    lum_a = luminance_array(a)
    lum_b = luminance_array(b)
    global_shift = phase_correlate(lum_a, lum_b)

    blocks = []
    for by in range(0, a.height - block + 1, block):
        for bx in range(0, a.width - block + 1, block):
            tile_a = lum_a[by : by + block, bx : bx + block]
            tile_b = lum_b[by : by + block, bx : bx + block]
            shift = phase_correlate(tile_a, tile_b, window=True)
            blocks.append(BlockShift(x=bx, y=by, size=block, shift=shift))

    return MotionReport(global_shift=global_shift, block_shifts=blocks)
