"""Robust homography estimation: normalized DLT inside an adaptive RANSAC loop.

Frame pairs shot from wind-shaken webcams mostly differ by a small projective
motion, but raindrop streaks corrupt a large share of the putative matches,
so the consensus stage has to shrug off heavy outlier contamination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..imaging import Homography
from .matching import Correspondence

__all__ = ["RansacResult", "solve_homography_dlt", "estimate_homography_ransac", "symmetric_transfer_errors"]


class DegenerateGeometryError(ValueError):
    """Correspondences cannot constrain a homography (collinear/coincident points)."""


class NoConsensusError(RuntimeError):
    """RANSAC found no model with at least 4 inliers."""


@dataclass(frozen=True)
class RansacResult:
    homography: Homography
    inlier_flags: np.ndarray
    iterations_used: int
    mean_reprojection_error: float

    @property
    def inlier_count(self) -> int:
        return int(self.inlier_flags.sum())


def _as_point_arrays(corrs):
    src = np.array([c.source for c in corrs], dtype=np.float64)
    dst = np.array([c.target for c in corrs], dtype=np.float64)
    return src, dst


def _normalization(points: np.ndarray) -> np.ndarray:
    """Hartley normalization: centroid to origin, RMS distance sqrt(2)."""
    centroid = points.mean(axis=0)
    centered = points - centroid
    rms = math.sqrt((centered**2).sum(axis=1).mean())
    if rms < 1e-12:
        raise DegenerateGeometryError("coincident points")
    scale = math.sqrt(2.0) / rms
    t = np.array(
        [
            [scale, 0.0, -scale * centroid[0]],
            [0.0, scale, -scale * centroid[1]],
            [0.0, 0.0, 1.0],
        ]
    )
    return t


def _any_three_collinear(points: np.ndarray, tol: float = 1e-9) -> bool:
    n = points.shape[0]
    if n > 12:  # full check is cubic; only guard small (minimal-sample) sets
        return False
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                a, b, c = points[i], points[j], points[k]
                area2 = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
                if area2 < tol:
                    return True
    return False


def solve_homography_dlt(corrs) -> Homography:
    """Least-squares homography from >= 4 correspondences via the DLT.

    Points are Hartley-normalized, the 2n x 9 system is solved by SVD, and
    the smallest right singular vector is denormalized into the result.
    """
    if len(corrs) < 4:
        raise ValueError(f"need at least 4 correspondences, got {len(corrs)}")
    src, dst = _as_point_arrays(corrs)
    if _any_three_collinear(src) or _any_three_collinear(dst):
        raise DegenerateGeometryError("three or more collinear points")

    t_src = _normalization(src)
    t_dst = _normalization(dst)
    ones = np.ones((src.shape[0], 1))
    src_n = (np.hstack([src, ones]) @ t_src.T)[:, :2]
    dst_n = (np.hstack([dst, ones]) @ t_dst.T)[:, :2]

    n = src.shape[0]
    a = np.zeros((2 * n, 9))
    x, y = src_n[:, 0], src_n[:, 1]
    u, v = dst_n[:, 0], dst_n[:, 1]
    a[0::2, 0] = x
    a[0::2, 1] = y
    a[0::2, 2] = 1.0
    a[0::2, 6] = -u * x
    a[0::2, 7] = -u * y
    a[0::2, 8] = -u
    a[1::2, 3] = x
    a[1::2, 4] = y
    a[1::2, 5] = 1.0
    a[1::2, 6] = -v * x
    a[1::2, 7] = -v * y
    a[1::2, 8] = -v

    _, sing, vt = np.linalg.svd(a)
    if sing[-2] < 1e-12:
        raise DegenerateGeometryError("rank-deficient correspondence system")
    h_n = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_n @ t_src
    try:
        return Homography(h)
    except ValueError as exc:
        raise DegenerateGeometryError(f"degenerate solution: {exc}") from exc


def symmetric_transfer_errors(h: Homography, corrs) -> np.ndarray:
    """Per-correspondence sqrt(forward^2 + backward^2) transfer error in pixels."""
    src, dst = _as_point_arrays(corrs)
    fwd = h.apply(src) - dst
    bwd = h.inverse().apply(dst) - src
    return np.sqrt((fwd**2).sum(axis=1) + (bwd**2).sum(axis=1))


def estimate_homography_ransac(
    corrs,
    inlier_threshold: float = 3.0,
    max_iterations: int = 2000,
    confidence: float = 0.995,
    seed: int = 0,
) -> RansacResult:
    """Adaptive 4-point RANSAC with a final all-inlier DLT refit.

    Models are ranked by inlier count, then lower mean inlier error, then
    earlier iteration, which keeps results deterministic for a fixed seed.
    The iteration bound shrinks as the observed inlier ratio rises.
    """
    n = len(corrs)
    if n < 4:
        raise ValueError(f"need at least 4 correspondences, got {n}")
    if not 0 < confidence < 1:
        raise ValueError("confidence must be in (0, 1)")

    rng = np.random.default_rng(seed)
    best_model = None
    best_flags = None
    best_errors = None
    best_count = 0
    best_mean_err = math.inf
    required = max_iterations
    iterations = 0

    while iterations < min(required, max_iterations):
        iterations += 1
        sample_idx = rng.choice(n, size=4, replace=False)
        sample = [corrs[i] for i in sample_idx]
        try:
            candidate = solve_homography_dlt(sample)
        except (DegenerateGeometryError, ValueError):
            continue
        errors = symmetric_transfer_errors(candidate, corrs)
        flags = errors <= inlier_threshold
        count = int(flags.sum())
        if count < 4:
            continue
        mean_err = float(errors[flags].mean())
        if count > best_count or (count == best_count and mean_err < best_mean_err):
            best_model, best_flags, best_errors = candidate, flags, errors
            best_count, best_mean_err = count, mean_err
            ratio = count / n
            if ratio >= 1.0:
                required = iterations
            else:
                miss = 1.0 - ratio**4
                miss = min(max(miss, 1e-12), 1.0 - 1e-12)
                required = math.ceil(math.log(1.0 - confidence) / math.log(miss))

    if best_model is None:
        raise NoConsensusError("no homography with >= 4 inliers")

    # Iterated refit on the consensus set until the inlier set stabilizes,
    # re-evaluating flags each pass so the inlier invariant holds against the
    # model actually returned. Keep the best sampled model if a refit loses
    # consensus.
    model, flags, errors = best_model, best_flags, best_errors
    for _ in range(10):
        try:
            refit = solve_homography_dlt([c for c, f in zip(corrs, flags) if f])
        except (DegenerateGeometryError, ValueError):
            break
        refit_errors = symmetric_transfer_errors(refit, corrs)
        refit_flags = refit_errors <= inlier_threshold
        if int(refit_flags.sum()) < 4:
            break
        converged = bool(np.array_equal(refit_flags, flags))
        model, flags, errors = refit, refit_flags, refit_errors
        if converged:
            break
    if int(flags.sum()) < int(best_flags.sum()):
        # refit wandered; fall back to the sampled consensus
        model, flags, errors = best_model, best_flags, best_errors

    mean_err = float(errors[flags].mean())
    return RansacResult(
        homography=model,
        inlier_flags=flags,
        iterations_used=iterations,
        mean_reprojection_error=mean_err,
    )
