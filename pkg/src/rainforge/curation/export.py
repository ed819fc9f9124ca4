"""Export accepted, split-assigned pairs into a train/val/test directory tree."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from .split import SPLIT_NAMES, SplitAssignment

__all__ = ["export_dataset"]


def export_dataset(records: dict, assignment: SplitAssignment, output_root, out_dir) -> dict:
    """Copy processed images to out/{split}/{scene}/{pair_id}_{rainy,clean}.png.

    Returns the per-split index dicts that are also written as index.json in
    each split directory. Only accepted pairs export; every accepted pair
    must carry a split assignment.
    """
    output_root = Path(output_root)
    out_dir = Path(out_dir)
    indexes = {name: {"split": name, "pairs": [], "frame_count": 0} for name in SPLIT_NAMES}

    accepted = {pid: rec for pid, rec in records.items() if rec.get("status") == "accepted"}
    missing = sorted(set(accepted) - set(assignment.assignments))
    if missing:
        raise ValueError(f"accepted pairs without split assignment: {', '.join(missing[:5])}")

    for pair_id in sorted(accepted):
        record = accepted[pair_id]
        split = assignment.assignments[pair_id]
        scene = record.get("scene", pair_id)
        dest = out_dir / split / scene
        dest.mkdir(parents=True, exist_ok=True)
        copied = {}
        for role, key in (("rainy", "processed_rainy"), ("clean", "processed_clean")):
            rel = record.get(key)
            if rel is None:
                raise ValueError(f"pair {pair_id} has no processed {role} image")
            src = output_root / rel
            target = dest / f"{pair_id}_{role}.png"
            shutil.copyfile(src, target)
            copied[role] = str(target.relative_to(out_dir))
        indexes[split]["pairs"].append({"pair_id": pair_id, "scene": scene, **copied})
        indexes[split]["frame_count"] += 2

    for name, index in indexes.items():
        split_dir = out_dir / name
        split_dir.mkdir(parents=True, exist_ok=True)
        with open(split_dir / "index.json", "w", encoding="utf-8") as fh:
            json.dump(index, fh, indent=2, sort_keys=True)
    return indexes
