"""Command-line entry points; every subcommand is a thin adapter over the library.

Exit codes: 0 success, 1 operational failure, 2 usage or configuration error.
Results print as JSON on stdout (or land in files given --out flags).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import objective as obj
from .curation import (
    ConfigError,
    PipelineConfig,
    export_dataset,
    ingest_pairs,
    load_config,
    load_manifest,
    run_corpus,
    run_pair,
    split_dataset,
)
from .curation.ingest import PairCandidate, parse_frame_timestamp
from .curation.criteria import assess_criteria
from .imaging import Homography, load_image, save_image
from .metrics import metric_report
from .rain import StreakParams, VeilParams, synthesize_pair

CONFIG_ENV_VAR = "RAINFORGE_CONFIG"


def _emit(payload, out=None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n", encoding="utf-8")
    print(text)


def _resolve_config(path_arg) -> PipelineConfig:
    path = path_arg or os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return PipelineConfig()
    return load_config(path)


def _candidate_from_args(args) -> PairCandidate:
    rainy = Path(args.rainy)
    clean = Path(args.clean)
    _, ts_r = parse_frame_timestamp(rainy.stem)
    base, ts_c = parse_frame_timestamp(clean.stem)
    return PairCandidate(
        pair_id=args.pair_id or rainy.stem,
        scene=args.scene or base,
        rainy_path=rainy,
        clean_path=clean,
        rainy_timestamp=ts_r,
        clean_timestamp=ts_c,
    )


def _cmd_metrics(args):
    a = load_image(args.a)
    b = load_image(args.b)
    _emit(metric_report(a, b), args.out)
    return 0


def _cmd_assess(args):
    cfg = _resolve_config(args.config)
    pair = _candidate_from_args(args)
    rainy = load_image(pair.rainy_path)
    clean = load_image(pair.clean_path)
    report = assess_criteria(rainy, clean, pair.time_delta_minutes(), cfg)
    _emit(report.to_dict(), args.out)
    return 0


def _cmd_align(args):
    cfg = _resolve_config(args.config)
    cfg.output_root = Path(args.out)
    if args.mode != "auto":
        # force the requested mode by pinning thresholds
        if args.mode == "homography":
            cfg.t_global = 0.0
            cfg.t_local = math.inf
        elif args.mode == "elastic":
            cfg.t_global = math.inf
            cfg.t_local = 0.0
        elif args.mode == "none":
            cfg.t_global = math.inf
            cfg.t_local = math.inf
    record = run_pair(_candidate_from_args(args), cfg)
    _emit(record, args.record_out)
    return 0 if record["status"] != "auto_rejected" else 1


def _cmd_pipeline(args):
    cfg = _resolve_config(args.config)
    records, errors = run_corpus(cfg)
    by_status: dict = {}
    for record in records:
        by_status[record["status"]] = by_status.get(record["status"], 0) + 1
    _emit(
        {
            "manifest": str(cfg.manifest_path()),
            "pairs": len(records),
            "by_status": by_status,
            "ingest_errors": errors,
        },
        args.out,
    )
    return 0


def _cmd_synth(args):
    clean = load_image(args.clean)
    streaks = StreakParams(
        width=clean.width,
        height=clean.height,
        count=args.count,
        opacity_range=tuple(args.opacity),
        seed=args.seed,
    )
    veil = VeilParams(strength=args.veil) if args.veil > 0 else None
    warp = None
    if args.shift is not None:
        warp = Homography.translation(args.shift[0], args.shift[1])
    rainy, provenance = synthesize_pair(clean, streaks=streaks, veil=veil, warp=warp, n_layers=args.layers)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.clean).stem
    rainy_path = out_dir / f"{stem}_rainy.png"
    save_image(rainy, rainy_path)
    provenance_path = out_dir / f"{stem}_rainy.json"
    provenance_path.write_text(json.dumps(provenance, indent=2, sort_keys=True) + "\n")
    _emit({"rainy": str(rainy_path), "provenance": str(provenance_path), **provenance})
    return 0


def _cmd_losscheck(args):
    rng = np.random.default_rng(args.seed)
    params = obj.RobustLossParams(
        temperature=args.temperature,
        include_positive_in_denominator=not args.exclude_positive,
    )
    batch = [(rng.normal(size=args.dim), rng.normal(size=args.dim)) for _ in range(args.batch)]
    batch_value, _ = obj.batch_loss_with_gradients(batch, params)

    anchor, positive = batch[0][1], batch[0][0]
    negatives = [v for pair in batch[1:] for v in pair]
    pair_value = obj.rain_robust_pair_loss(anchor, positive, negatives, params)

    def pair_fn(vectors):
        a, p, *negs = vectors
        loss, ga, gp, gn = obj.pair_loss_with_gradients(a, p, negs, params)
        return loss, [ga, gp] + gn

    def batch_fn(vectors):
        pairs = [(vectors[2 * i], vectors[2 * i + 1]) for i in range(len(vectors) // 2)]
        loss, paired = obj.batch_loss_with_gradients(pairs, params)
        return loss, [g for gs in paired for g in gs]

    def cosine_fn(vectors):
        value = obj.cosine_similarity(vectors[0], vectors[1])
        return value, list(obj.cosine_similarity_gradient(vectors[0], vectors[1]))

    pair_err = obj.gradient_check(pair_fn, [anchor, positive] + negatives, epsilon=args.epsilon)
    flat = [v for pair in batch for v in pair]
    batch_err = obj.gradient_check(batch_fn, flat, epsilon=args.epsilon)
    cos_err = obj.gradient_check(cosine_fn, [rng.normal(size=args.dim), rng.normal(size=args.dim)], epsilon=args.epsilon)

    _emit(
        {
            "settings": {
                "temperature": params.temperature,
                "include_positive_in_denominator": params.include_positive_in_denominator,
                "batch": args.batch,
                "dim": args.dim,
                "seed": args.seed,
                "epsilon": args.epsilon,
            },
            "terms": {
                "batch_loss": batch_value,
                "first_pair_loss": pair_value,
            },
            "gradient_check_max_relative_error": {
                "cosine_similarity": cos_err,
                "pair_loss": pair_err,
                "batch_loss": batch_err,
            },
        },
        args.out,
    )
    return 0


def _cmd_split(args):
    records = load_manifest(args.manifest)
    assignment = split_dataset(records, ratios=tuple(args.ratios), seed=args.seed)
    _emit(assignment.to_dict(), args.out)
    return 0


def _cmd_export(args):
    records = load_manifest(args.manifest)
    assignment = split_dataset(records, ratios=tuple(args.ratios), seed=args.seed)
    indexes = export_dataset(records, assignment, args.root, args.out)
    _emit({"out": str(args.out), "splits": {k: v["frame_count"] for k, v in indexes.items()}})
    return 0


def _cmd_serve(args):
    from .server import serve_review_api

    server = serve_review_api(args.manifest, args.root, host=args.host, port=args.port)
    host, port = server.server_address[:2]
    print(json.dumps({"serving": f"http://{host}:{port}", "manifest": str(args.manifest)}))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rainforge",
        description="Curation and alignment toolkit for paired rain/clean image datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="PSNR / SSIM / MS-SSIM between two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_metrics)

    p = sub.add_parser("assess", help="collection-criteria report for one pair")
    p.add_argument("--rainy", required=True)
    p.add_argument("--clean", required=True)
    p.add_argument("--config")
    p.add_argument("--pair-id", dest="pair_id")
    p.add_argument("--scene")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_assess)

    p = sub.add_parser("align", help="run correction on one pair")
    p.add_argument("--rainy", required=True)
    p.add_argument("--clean", required=True)
    p.add_argument("--mode", choices=("auto", "none", "homography", "elastic"), default="auto")
    p.add_argument("--out", required=True, help="output root for artifacts")
    p.add_argument("--record-out", dest="record_out")
    p.add_argument("--config")
    p.add_argument("--pair-id", dest="pair_id")
    p.add_argument("--scene")
    p.set_defaults(fn=_cmd_align)

    p = sub.add_parser("pipeline", help="run the full curation funnel over a corpus")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_pipeline)

    p = sub.add_parser("synth", help="synthesize a rainy frame from a clean one")
    p.add_argument("--clean", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=60)
    p.add_argument("--opacity", type=float, nargs=2, default=(0.15, 0.6))
    p.add_argument("--veil", type=float, default=0.0)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--shift", type=float, nargs=2, default=None, help="translate clean by (tx, ty) first")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("losscheck", help="objective terms and gradient verification")
    p.add_argument("--temperature", type=float, default=0.25)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument(
        "--exclude-positive",
        action="store_true",
        help="leave the positive pair out of the contrastive denominator (unbounded-below variant)",
    )
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_losscheck)

    p = sub.add_parser("split", help="assign accepted pairs to train/val/test")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratios", type=float, nargs=3, default=(0.829, 0.105, 0.066))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_split)

    p = sub.add_parser("export", help="export accepted pairs into a split directory tree")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", required=True, help="pipeline output root holding processed images")
    p.add_argument("--out", required=True)
    p.add_argument("--ratios", type=float, nargs=3, default=(0.829, 0.105, 0.066))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_export)

    p = sub.add_parser("serve", help="serve the review HTTP API")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", required=True, help="images root (pipeline output root)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8731)
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
