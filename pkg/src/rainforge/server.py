"""Loopback HTTP service backing the human review step.

Serves manifest records and pair imagery (rainy / clean / aligned / blend /
diff views, all rendered server-side so the browser client stays a thin
shell), and persists accept/reject decisions into the manifest. Review
writes are serialized through one lock; reads reload the manifest per
request so external appends show up immediately.
"""

from __future__ import annotations

import io
import json
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from .curation.manifest import load_manifest, update_review
from .imaging import ImageBuffer, load_image

__all__ = ["ReviewService", "serve_review_api"]

VIEWS = ("rainy", "clean", "aligned", "blend", "diff")


def _png_bytes(img: ImageBuffer) -> bytes:
    from PIL import Image

    arr = np.round(img.data * 255.0).astype(np.uint8)
    pil = Image.fromarray(arr[:, :, 0], mode="L") if img.channels == 1 else Image.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


class ReviewService:
    """Manifest-backed review operations, independent of the HTTP layer."""

    def __init__(self, manifest_path, images_root):
        self.manifest_path = Path(manifest_path)
        self.images_root = Path(images_root)
        self._write_lock = threading.Lock()

    def records(self) -> dict:
        return load_manifest(self.manifest_path)

    def list_pairs(self, status: str | None, page: int, page_size: int) -> dict:
        records = list(self.records().values())
        if status:
            records = [r for r in records if r.get("status") == status]
        total = len(records)
        start = page * page_size
        return {
            "pairs": records[start : start + page_size],
            "page": page,
            "page_size": page_size,
            "total": total,
        }

    def stats(self) -> dict:
        counts: dict = {}
        for record in self.records().values():
            counts[record.get("status", "unknown")] = counts.get(record.get("status", "unknown"), 0) + 1
        return {"counts": counts, "total": sum(counts.values())}

    def _load_role(self, record: dict, processed_key: str, source_key: str) -> ImageBuffer:
        rel = record.get(processed_key)
        if rel is not None:
            path = self.images_root / rel
            if path.is_file():
                return load_image(path)
        return load_image(record[source_key])

    def render_view(self, pair_id: str, view: str) -> bytes:
        if view not in VIEWS:
            raise ValueError(f"unknown view {view!r}; expected one of {', '.join(VIEWS)}")
        records = self.records()
        if pair_id not in records:
            raise KeyError(pair_id)
        record = records[pair_id]
        if view == "clean":
            return _png_bytes(load_image(record["clean_path"]))
        rainy = self._load_role(record, "processed_rainy", "rainy_path")
        if view == "rainy":
            return _png_bytes(rainy)
        aligned = self._load_role(record, "processed_clean", "clean_path")
        if view == "aligned":
            return _png_bytes(aligned)
        if rainy.data.shape != aligned.data.shape:
            raise ValueError("rainy and aligned images have different shapes")
        if view == "blend":
            return _png_bytes(ImageBuffer(0.5 * rainy.data + 0.5 * aligned.data))
        diff = np.clip(np.abs(rainy.data - aligned.data) * 4.0, 0.0, 1.0)
        return _png_bytes(ImageBuffer(diff))

    def submit_review(self, pair_id: str, decision: str, note: str) -> dict:
        decided_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
        with self._write_lock:
            return update_review(self.manifest_path, pair_id, decision, note, decided_at)


class _Handler(BaseHTTPRequestHandler):
    service: ReviewService = None  # injected by serve_review_api

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, payload, status=200):
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_png(self, body: bytes):
        self.send_response(200)
        self.send_header("Content-Type", "image/png")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status, message):
        self._send_json({"error": message}, status=status)

    def do_GET(self):
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
        try:
            if parts == ["api", "stats"]:
                self._send_json(self.service.stats())
            elif parts == ["api", "pairs"]:
                page = int(query.get("page", 0))
                page_size = int(query.get("page_size", 50))
                self._send_json(self.service.list_pairs(query.get("status"), page, page_size))
            elif len(parts) == 4 and parts[:2] == ["api", "pairs"] and parts[3] == "image":
                view = query.get("view", "blend")
                self._send_png(self.service.render_view(parts[2], view))
            else:
                self._error(404, f"no such endpoint: {parsed.path}")
        except KeyError as exc:
            self._error(404, f"unknown pair {exc.args[0]!r}")
        except ValueError as exc:
            self._error(400, str(exc))
        except FileNotFoundError as exc:
            self._error(404, str(exc))

    def do_POST(self):
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        if not (len(parts) == 4 and parts[:2] == ["api", "pairs"] and parts[3] == "review"):
            self._error(404, f"no such endpoint: {parsed.path}")
            return
        pair_id = parts[2]
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError):
            self._error(400, "body must be JSON")
            return
        decision = body.get("decision")
        note = body.get("note", "")
        if decision not in ("accept", "reject"):
            self._error(400, f"invalid decision {decision!r}; expected accept or reject")
            return
        if not isinstance(note, str):
            self._error(400, "note must be a string")
            return
        try:
            record = self.service.submit_review(pair_id, decision, note)
        except KeyError:
            self._error(404, f"unknown pair {pair_id!r}")
            return
        except PermissionError as exc:
            self._error(409, str(exc))
            return
        self._send_json(record)


def serve_review_api(manifest_path, images_root, host="127.0.0.1", port=8731):
    """Build (not start) the review HTTP server; call serve_forever() to run."""
    service = ReviewService(manifest_path, images_root)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    return server
