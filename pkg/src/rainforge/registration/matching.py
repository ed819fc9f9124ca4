"""Descriptor matching with the nearest/second-nearest ratio test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Correspondence", "match_descriptors"]


@dataclass(frozen=True)
class Correspondence:
    source: tuple
    target: tuple
    match_score: float  # ratio-test value; lower is more distinctive


def match_descriptors(a, b, ratio: float = 0.75):
    """Match keypoints in `a` to keypoints in `b`.

    A match is admitted when nearest/second-nearest descriptor distance is
    below `ratio`; each target keypoint keeps only its best-scoring claim,
    so the result is one-to-one.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    if not a or len(b) < 2:
        return []

    desc_a = np.stack([kp.descriptor for kp in a])
    desc_b = np.stack([kp.descriptor for kp in b])

    # squared euclidean distances, expanded to avoid the NxMx128 intermediate
    sq_a = (desc_a**2).sum(axis=1)[:, None]
    sq_b = (desc_b**2).sum(axis=1)[None, :]
    d2 = np.maximum(sq_a + sq_b - 2.0 * desc_a @ desc_b.T, 0.0)

    nearest_idx = np.argmin(d2, axis=1)
    rows = np.arange(d2.shape[0])
    nearest = np.sqrt(d2[rows, nearest_idx])
    d2_masked = d2.copy()
    d2_masked[rows, nearest_idx] = np.inf
    second = np.sqrt(np.min(d2_masked, axis=1))

    claims = {}
    for i in rows:
        if second[i] <= 0:
            continue
        score = float(nearest[i] / second[i])
        if score >= ratio:
            continue
        j = int(nearest_idx[i])
        held = claims.get(j)
        if held is None or score < held[1]:
            claims[j] = (int(i), score)

    matches = []
    for j in sorted(claims):
        i, score = claims[j]
        matches.append(
            Correspondence(source=(a[i].x, a[i].y), target=(b[j].x, b[j].y), match_score=score)
        )
    return matches
