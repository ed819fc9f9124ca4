from .config import ConfigError, PipelineConfig, load_config, parse_config_text
from .criteria import CriteriaReport, assess_criteria, select_correction
from .export import export_dataset
from .ingest import PairCandidate, ingest_pairs, parse_frame_timestamp
from .manifest import (
    SCHEMA_VERSION,
    ManifestError,
    append_record,
    load_manifest,
    serialize_record,
    update_review,
)
from .runner import pair_metrics, run_corpus, run_pair
from .split import SPLIT_NAMES, SplitAssignment, largest_remainder, split_dataset

__all__ = [
    "ConfigError",
    "PipelineConfig",
    "load_config",
    "parse_config_text",
    "CriteriaReport",
    "assess_criteria",
    "select_correction",
    "PairCandidate",
    "ingest_pairs",
    "parse_frame_timestamp",
    "ManifestError",
    "SCHEMA_VERSION",
    "append_record",
    "load_manifest",
    "serialize_record",
    "update_review",
    "run_pair",
    "run_corpus",
    "pair_metrics",
    "SplitAssignment",
    "SPLIT_NAMES",
    "largest_remainder",
    "split_dataset",
    "export_dataset",
]
