"""Append-only JSON-lines manifest of curation records.

One record per line; later lines supersede earlier ones with the same
pair_id, so reviews and re-runs append rather than rewrite. Serialization is
deterministic (sorted keys, no wall-clock fields added by the pipeline), so
re-running a pipeline over the same corpus reproduces the manifest byte for
byte.
"""

from __future__ import annotations

import json
from pathlib import Path

__all__ = [
    "ManifestError",
    "SCHEMA_VERSION",
    "STATUSES",
    "append_record",
    "load_manifest",
    "update_review",
    "serialize_record",
]

SCHEMA_VERSION = 1
STATUSES = ("pending", "auto_rejected", "needs_review", "accepted", "rejected")
_REVIEWABLE = ("pending", "needs_review", "accepted", "rejected")


class ManifestError(ValueError):
    """Malformed manifest content; message carries the line number."""


def serialize_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, allow_nan=False)


def _validate(record: dict):
    if record.get("v") != SCHEMA_VERSION:
        raise ManifestError(f"record schema version must be {SCHEMA_VERSION}")
    if not record.get("pair_id"):
        raise ManifestError("record is missing pair_id")
    status = record.get("status")
    if status not in STATUSES:
        raise ManifestError(f"invalid status {status!r}")
    if status in ("accepted", "rejected") and not record.get("review"):
        raise ManifestError(f"status {status} requires a review decision")
    if record.get("correction_mode") in ("elastic", "homography+elastic") and not record.get("field_ref"):
        raise ManifestError("elastic correction requires a stored field reference")


def append_record(path, record: dict) -> None:
    """Validate and append one record to the manifest."""
    _validate(record)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(serialize_record(record) + "\n")


def load_manifest(path) -> dict:
    """Latest state per pair_id, keyed in first-appearance order."""
    path = Path(path)
    records: dict = {}
    if not path.exists():
        return records
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path.name}:{lineno}: malformed JSON ({exc.msg})") from exc
            try:
                _validate(record)
            except ManifestError as exc:
                raise ManifestError(f"{path.name}:{lineno}: {exc}") from exc
            # assignment keeps first-appearance key order, latest content wins
            records[record["pair_id"]] = record
    return records


def update_review(path, pair_id: str, decision: str, note: str, decided_at: str) -> dict:
    """Append a superseding record carrying a review decision; returns it."""
    if decision not in ("accept", "reject"):
        raise ValueError(f"decision must be accept or reject, got {decision!r}")
    records = load_manifest(path)
    if pair_id not in records:
        raise KeyError(f"pair {pair_id!r} not in manifest")
    record = dict(records[pair_id])
    if record["status"] == "auto_rejected":
        raise PermissionError(f"pair {pair_id!r} was auto-rejected; review is not applicable")
    record["review"] = {"decision": decision, "note": note, "decided_at": decided_at}
    record["status"] = "accepted" if decision == "accept" else "rejected"
    append_record(path, record)
    return record
