"""Deterministic scene-atomic train/val/test splitting.

Every frame of a scene lands in one split; frame quotas come from
largest-remainder apportionment of the ratios, and shuffled scenes fill the
split with the largest remaining deficit, which honors the ratios as closely
as integer scene sizes allow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SplitAssignment", "largest_remainder", "split_dataset", "SPLIT_NAMES"]

SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class SplitAssignment:
    assignments: dict  # pair_id -> split name
    scene_splits: dict  # scene -> split name
    ratios: tuple
    seed: int
    warnings: list = field(default_factory=list)

    def counts(self) -> dict:
        out = {name: 0 for name in SPLIT_NAMES}
        for split in self.assignments.values():
            out[split] += 1
        return out

    def scene_counts(self) -> dict:
        out = {name: 0 for name in SPLIT_NAMES}
        for split in self.scene_splits.values():
            out[split] += 1
        return out

    def to_dict(self) -> dict:
        return {
            "ratios": list(self.ratios),
            "seed": self.seed,
            "assignments": dict(sorted(self.assignments.items())),
            "scene_splits": dict(sorted(self.scene_splits.items())),
            "warnings": list(self.warnings),
        }


def largest_remainder(total: int, ratios) -> list:
    """Integer apportionment of `total` by `ratios` (ties broken by position)."""
    raw = [total * r for r in ratios]
    floors = [math.floor(x) for x in raw]
    leftover = total - sum(floors)
    order = sorted(range(len(ratios)), key=lambda i: (-(raw[i] - floors[i]), i))
    for i in order[:leftover]:
        floors[i] += 1
    return floors


def split_dataset(records, ratios=(0.829, 0.105, 0.066), seed: int = 0) -> SplitAssignment:
    """Assign accepted pairs to train/val/test, whole scenes at a time.

    `records` maps pair_id -> record dict (a loaded manifest); only accepted
    pairs participate.
    """
    if len(ratios) != len(SPLIT_NAMES):
        raise ValueError(f"need {len(SPLIT_NAMES)} ratios")
    if any(r <= 0 for r in ratios):
        raise ValueError("ratios must be positive")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")

    scenes: dict = {}
    for pair_id, record in records.items():
        if record.get("status") != "accepted":
            continue
        scenes.setdefault(record.get("scene", pair_id), []).append(pair_id)
    if not scenes:
        raise ValueError("no accepted pairs to split")

    warnings = []
    if len(scenes) < len(SPLIT_NAMES):
        warnings.append(
            f"only {len(scenes)} scene(s) for {len(SPLIT_NAMES)} splits; some splits will be empty"
        )

    scene_names = sorted(scenes)
    rng = np.random.default_rng(seed)
    order = [scene_names[i] for i in rng.permutation(len(scene_names))]

    total_pairs = sum(len(v) for v in scenes.values())
    quotas = largest_remainder(total_pairs, ratios)

    deficits = list(quotas)
    scene_splits = {}
    for scene in order:
        idx = max(range(len(SPLIT_NAMES)), key=lambda i: (deficits[i], -i))
        scene_splits[scene] = SPLIT_NAMES[idx]
        deficits[idx] -= len(scenes[scene])

    assignments = {}
    for scene, pair_ids in scenes.items():
        for pair_id in sorted(pair_ids):
            assignments[pair_id] = scene_splits[scene]

    return SplitAssignment(
        assignments=assignments,
        scene_splits=scene_splits,
        ratios=tuple(ratios),
        seed=seed,
        warnings=warnings,
    )
