"""The whole curation funnel on a synthetic ten-pair corpus.

Builds frame pairs with known perturbations (still, camera shake, local
motion), runs ingest -> criteria -> correction -> metrics -> manifest,
reviews every pair programmatically, then splits and exports the dataset.
The same flow is available from the command line:

    rainforge pipeline --config pipeline.cfg
    rainforge split --manifest out/manifest.jsonl
    rainforge export --manifest out/manifest.jsonl --root out --out dataset
    rainforge serve --manifest out/manifest.jsonl --root out
"""

import json
import math
import shutil
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import build_synthetic_corpus  # reuse the harness generator

from rainforge.curation import (
    PipelineConfig,
    export_dataset,
    load_manifest,
    run_corpus,
    split_dataset,
    update_review,
)

ROOT = Path(__file__).parent / "output" / "pipeline_demo"
if ROOT.exists():
    shutil.rmtree(ROOT)
ROOT.mkdir(parents=True)

expected = build_synthetic_corpus(ROOT, size=192, seed=3)
print("ground-truth perturbations:", json.dumps(expected, indent=None))

config = PipelineConfig(
    rainy_dir=ROOT / "rainy",
    clean_dir=ROOT / "clean",
    output_root=ROOT / "out",
    block=64,
)
records, errors = run_corpus(config)
print(f"\nprocessed {len(records)} pairs ({len(errors)} ingest errors)")
for record in records:
    pre = record["metrics_pre"]["psnr_db"]
    post = record["metrics"]["psnr_db"]
    pre = math.inf if pre == "inf" else pre
    post = math.inf if post == "inf" else post
    print(
        f"  {record['pair_id']}: mode={record['correction_mode']:<20} status={record['status']:<13}"
        f" PSNR {pre:6.2f} -> {post:6.2f} dB"
    )

manifest = config.manifest_path()
for record in records:
    if record["status"] in ("pending", "needs_review"):
        update_review(manifest, record["pair_id"], "accept", "demo reviewer", "2024-03-02T00:00:00")

latest = load_manifest(manifest)
assignment = split_dataset(latest, ratios=(0.829, 0.105, 0.066), seed=4)
print(f"\nsplit: {assignment.counts()} (scenes {assignment.scene_counts()})")

indexes = export_dataset(latest, assignment, config.output_root, ROOT / "dataset")
for split, index in indexes.items():
    print(f"  {split}: {index['frame_count']} frames")
print(f"\nmanifest: {manifest}")
print(f"dataset tree: {ROOT / 'dataset'}")
