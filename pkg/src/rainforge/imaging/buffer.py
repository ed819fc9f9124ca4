"""Core containers: images, homographies, displacement fields, region masks.

All containers wrap read-only numpy arrays so that operations on them are
pure by construction; "mutating" an image means building a new buffer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ImageBuffer",
    "Homography",
    "DisplacementField",
    "RegionMask",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr or out.base is arr:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ImageBuffer:
    """H x W x C image with C in {1, 3} and float64 values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"image must be HxW or HxWxC with C in {{1,3}}, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must have at least one pixel")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]; use ImageBuffer.clamped for raw data")
        object.__setattr__(self, "data", _freeze(arr))

    @classmethod
    def clamped(cls, arr: np.ndarray) -> "ImageBuffer":
        """Build a buffer from raw data, clipping into [0, 1] first."""
        arr = np.nan_to_num(np.asarray(arr, dtype=np.float64), nan=0.0, posinf=1.0, neginf=0.0)
        return cls(np.clip(arr, 0.0, 1.0))

    @classmethod
    def full(cls, height: int, width: int, value=0.0, channels: int = 3) -> "ImageBuffer":
        return cls(np.full((height, width, channels), value, dtype=np.float64))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def plane(self, c: int) -> np.ndarray:
        return self.data[:, :, c]

    def same_shape(self, other: "ImageBuffer") -> bool:
        return self.data.shape == other.data.shape


@dataclass(frozen=True)
class Homography:
    """3x3 projective map from source pixel coordinates to target coordinates.

    The stored matrix is normalized so that m[2, 2] == 1 whenever that entry
    is not vanishingly small, and is guaranteed invertible.
    """

    m: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.m, dtype=np.float64)
        if mat.shape != (3, 3):
            raise ValueError(f"homography must be 3x3, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("homography contains non-finite values")
        if abs(mat[2, 2]) > 1e-12:
            mat = mat / mat[2, 2]
        det = np.linalg.det(mat)
        if not np.isfinite(det) or abs(det) <= 1e-12:
            raise ValueError("homography is singular")
        object.__setattr__(self, "m", _freeze(mat))

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        mat = np.eye(3)
        mat[0, 2] = tx
        mat[1, 2] = ty
        return cls(mat)

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.m))

    def compose(self, inner: "Homography") -> "Homography":
        """Map equal to applying `inner` first, then this one."""
        return Homography(self.m @ inner.m)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map an (N, 2) array of (x, y) points through the homography."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        ones = np.ones((pts.shape[0], 1))
        hom = np.hstack([pts, ones]) @ self.m.T
        return hom[:, :2] / hom[:, 2:3]

    def is_identity(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.m - np.eye(3)) <= tol))


@dataclass(frozen=True)
class DisplacementField:
    """Per-pixel (dx, dy) motion vectors, stored as an (H, W, 2) array."""

    vectors: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.vectors, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError(f"displacement field must be HxWx2, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("displacement field contains non-finite values")
        object.__setattr__(self, "vectors", _freeze(arr))

    @classmethod
    def zero(cls, height: int, width: int) -> "DisplacementField":
        return cls(np.zeros((height, width, 2)))

    @property
    def height(self) -> int:
        return self.vectors.shape[0]

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    def magnitudes(self) -> np.ndarray:
        return np.hypot(self.vectors[:, :, 0], self.vectors[:, :, 1])


@dataclass(frozen=True)
class RegionMask:
    """Boolean inclusion mask matching the image it applies to."""

    included: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.included, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"mask must be HxW, got {arr.shape}")
        object.__setattr__(self, "included", _freeze(arr))

    @classmethod
    def full(cls, height: int, width: int) -> "RegionMask":
        return cls(np.ones((height, width), dtype=bool))

    @classmethod
    def from_rectangles(cls, height: int, width: int, excluded) -> "RegionMask":
        """Mask that excludes the given (x, y, w, h) rectangles."""
        arr = np.ones((height, width), dtype=bool)
        for x, y, w, h in excluded:
            x0, y0 = max(0, int(x)), max(0, int(y))
            x1, y1 = min(width, int(x) + int(w)), min(height, int(y) + int(h))
            arr[y0:y1, x0:x1] = False
        return cls(arr)

    @property
    def height(self) -> int:
        return self.included.shape[0]

    @property
    def width(self) -> int:
        return self.included.shape[1]

    def count(self) -> int:
        return int(self.included.sum())

    def intersect(self, other: "RegionMask") -> "RegionMask":
        if self.included.shape != other.included.shape:
            raise ValueError("mask dimensions differ")
        return RegionMask(self.included & other.included)
