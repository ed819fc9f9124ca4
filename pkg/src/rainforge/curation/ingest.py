"""Pair ingestion from local directories of rainy and clean frames.

Pairing is either by shared stem (after stripping a trailing
`_YYYYMMDDThhmmss` timestamp token, which also supplies capture times) or by
an explicit CSV map of rainy,clean[,scene] rows. Problems with individual
files are reported, never fatal.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

__all__ = ["PairCandidate", "ingest_pairs", "parse_frame_timestamp"]

_TS_RE = re.compile(r"^(?P<base>.*)_(?P<ts>\d{8}T\d{6})$")
_IMAGE_EXTS = (".png", ".ppm")


@dataclass(frozen=True)
class PairCandidate:
    pair_id: str
    scene: str
    rainy_path: Path
    clean_path: Path
    rainy_timestamp: datetime | None
    clean_timestamp: datetime | None

    def time_delta_minutes(self) -> float | None:
        if self.rainy_timestamp is None or self.clean_timestamp is None:
            return None
        delta = abs((self.clean_timestamp - self.rainy_timestamp).total_seconds())
        return delta / 60.0


def parse_frame_timestamp(stem: str):
    """Split `name_YYYYMMDDThhmmss` into (base, datetime); timestamp optional."""
    m = _TS_RE.match(stem)
    if not m:
        return stem, None
    try:
        ts = datetime.strptime(m.group("ts"), "%Y%m%dT%H%M%S")
    except ValueError:
        return stem, None
    return m.group("base"), ts


def _scan(directory: Path) -> dict:
    """base -> sorted list of (timestamp, path) for every image in a directory."""
    found: dict = {}
    for path in sorted(directory.iterdir()):
        if not path.is_file() or path.suffix.lower() not in _IMAGE_EXTS:
            continue
        base, ts = parse_frame_timestamp(path.stem)
        found.setdefault(base, []).append((ts, path))
    for entries in found.values():
        entries.sort(key=lambda e: (e[0] is None, e[0] or datetime.min, e[1].name))
    return found


def ingest_pairs(rainy_dir, clean_dir, pairs_csv=None):
    """Collect pair candidates; returns (candidates, error strings)."""
    rainy_dir = Path(rainy_dir)
    clean_dir = Path(clean_dir)
    if not rainy_dir.is_dir():
        raise FileNotFoundError(f"rainy directory not found: {rainy_dir}")
    if not clean_dir.is_dir():
        raise FileNotFoundError(f"clean directory not found: {clean_dir}")
    if pairs_csv is not None:
        return _ingest_csv(Path(pairs_csv))

    candidates = []
    errors = []
    rainy_map = _scan(rainy_dir)
    clean_map = _scan(clean_dir)

    for base in sorted(set(rainy_map) | set(clean_map)):
        rainy_entries = rainy_map.get(base, [])
        clean_entries = clean_map.get(base, [])
        if not rainy_entries or not clean_entries:
            side = "clean" if not clean_entries else "rainy"
            errors.append(f"unmatched {side} frames for '{base}'")
            continue
        if len(rainy_entries) != len(clean_entries):
            errors.append(
                f"frame count mismatch for '{base}': {len(rainy_entries)} rainy vs {len(clean_entries)} clean;"
                " pairing by order"
            )
        n = min(len(rainy_entries), len(clean_entries))
        multi = n > 1
        for i in range(n):
            r_ts, r_path = rainy_entries[i]
            c_ts, c_path = clean_entries[i]
            pair_id = f"{base}_{i:04d}" if multi else base
            candidates.append(
                PairCandidate(
                    pair_id=pair_id,
                    scene=base,
                    rainy_path=r_path,
                    clean_path=c_path,
                    rainy_timestamp=r_ts,
                    clean_timestamp=c_ts,
                )
            )
    return candidates, errors


def _ingest_csv(csv_path: Path):
    if not csv_path.is_file():
        raise FileNotFoundError(f"pairs CSV not found: {csv_path}")
    candidates = []
    errors = []
    seen = set()
    with open(csv_path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                errors.append(f"{csv_path.name}:{lineno}: expected rainy,clean[,scene]")
                continue
            rainy = Path(row[0].strip()).expanduser()
            clean = Path(row[1].strip()).expanduser()
            if not rainy.is_absolute():
                rainy = csv_path.parent / rainy
            if not clean.is_absolute():
                clean = csv_path.parent / clean
            if not rainy.is_file() or not clean.is_file():
                missing = rainy if not rainy.is_file() else clean
                errors.append(f"{csv_path.name}:{lineno}: missing file {missing}")
                continue
            base_r, ts_r = parse_frame_timestamp(rainy.stem)
            base_c, ts_c = parse_frame_timestamp(clean.stem)
            scene = row[2].strip() if len(row) > 2 and row[2].strip() else base_r
            pair_id = rainy.stem if rainy.stem not in seen else f"{rainy.stem}_{lineno}"
            seen.add(pair_id)
            candidates.append(
                PairCandidate(
                    pair_id=pair_id,
                    scene=scene,
                    rainy_path=rainy,
                    clean_path=clean,
                    rainy_timestamp=ts_r,
                    clean_timestamp=ts_c,
                )
            )
    return candidates, errors
