"""Pipeline configuration: a small key/value file with sections.

Grammar (documented in the README): `[section]` headers group `key = value`
lines; values are quoted strings, integers, floats, true/false, or
`[v1, v2, ...]` lists of scalars; `#` starts a comment. Parse errors always
carry the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

__all__ = ["ConfigError", "PipelineConfig", "parse_config_text", "load_config"]


class ConfigError(ValueError):
    """Malformed configuration; message carries the line number."""


def _parse_scalar(token: str, lineno: int):
    token = token.strip()
    if not token:
        raise ConfigError(f"line {lineno}: empty value")
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return token[1:-1]
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        if any(c in token for c in ".eE") and not token.lstrip("+-").isdigit():
            return float(token)
        return int(token)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {token!r}") from None


def parse_config_text(text: str) -> dict:
    """Parse config text into {section: {key: value}}."""
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"line {lineno}: malformed section header {raw.strip()!r}")
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if value.startswith("["):
            if not value.endswith("]"):
                raise ConfigError(f"line {lineno}: unterminated list")
            inner = value[1:-1].strip()
            parsed = [] if not inner else [_parse_scalar(t, lineno) for t in inner.split(",")]
            sections[current][key] = parsed
        else:
            sections[current][key] = _parse_scalar(value, lineno)
    return sections


@dataclass
class PipelineConfig:
    rainy_dir: Path = Path("rainy")
    clean_dir: Path = Path("clean")
    output_root: Path = Path("curated")
    manifest: Path = Path("manifest.jsonl")
    pairs_csv: Path | None = None

    t_global: float = 1.0
    t_local: float = 0.75
    illumination: float = 0.05
    max_time_delta_minutes: float = 40.0
    exposure_p1_max: float = 0.5
    exposure_p99_min: float = 0.1

    block: int = 64

    ransac_inlier_threshold: float = 3.0
    ransac_confidence: float = 0.995
    ransac_max_iterations: int = 2000
    ransac_seed: int = 0
    sift_contrast_threshold: float = 0.03
    match_ratio: float = 0.75

    demons_iterations: int = 200
    demons_field_sigma: float = 2.0
    demons_update_sigma: float = 1.0
    demons_max_step: float = 2.0
    demons_stop_tolerance: float = 0.01

    auto_accept_uncorrected: bool = False

    split_ratios: tuple = (0.829, 0.105, 0.066)
    split_seed: int = 0

    masks: dict = field(default_factory=dict)  # scene -> mask png path or rectangle list

    def manifest_path(self) -> Path:
        if self.manifest.is_absolute():
            return self.manifest
        return self.output_root / self.manifest

    def thresholds_dict(self) -> dict:
        return {
            "t_global": self.t_global,
            "t_local": self.t_local,
            "illumination": self.illumination,
            "max_time_delta_minutes": self.max_time_delta_minutes,
            "exposure_p1_max": self.exposure_p1_max,
            "exposure_p99_min": self.exposure_p99_min,
        }


_SECTION_KEYS = {
    ("paths", "rainy_dir"): ("rainy_dir", Path),
    ("paths", "clean_dir"): ("clean_dir", Path),
    ("paths", "output_root"): ("output_root", Path),
    ("paths", "manifest"): ("manifest", Path),
    ("paths", "pairs_csv"): ("pairs_csv", Path),
    ("thresholds", "t_global"): ("t_global", float),
    ("thresholds", "t_local"): ("t_local", float),
    ("thresholds", "illumination"): ("illumination", float),
    ("thresholds", "max_time_delta_minutes"): ("max_time_delta_minutes", float),
    ("thresholds", "exposure_p1_max"): ("exposure_p1_max", float),
    ("thresholds", "exposure_p99_min"): ("exposure_p99_min", float),
    ("motion", "block"): ("block", int),
    ("ransac", "inlier_threshold"): ("ransac_inlier_threshold", float),
    ("ransac", "confidence"): ("ransac_confidence", float),
    ("ransac", "max_iterations"): ("ransac_max_iterations", int),
    ("ransac", "seed"): ("ransac_seed", int),
    ("sift", "contrast_threshold"): ("sift_contrast_threshold", float),
    ("sift", "match_ratio"): ("match_ratio", float),
    ("demons", "iterations"): ("demons_iterations", int),
    ("demons", "field_sigma"): ("demons_field_sigma", float),
    ("demons", "update_sigma"): ("demons_update_sigma", float),
    ("demons", "max_step"): ("demons_max_step", float),
    ("demons", "stop_tolerance"): ("demons_stop_tolerance", float),
    ("pipeline", "auto_accept_uncorrected"): ("auto_accept_uncorrected", bool),
    ("split", "seed"): ("split_seed", int),
}


def config_from_sections(sections: dict, base_dir: Path | None = None) -> PipelineConfig:
    cfg = PipelineConfig()
    known_fields = {f.name for f in fields(PipelineConfig)}
    for section, entries in sections.items():
        for key, value in entries.items():
            if section == "masks":
                cfg.masks[key] = value
                continue
            if section == "split" and key == "ratios":
                if not isinstance(value, list) or len(value) != 3:
                    raise ConfigError("split.ratios must be a list of 3 numbers")
                cfg.split_ratios = tuple(float(v) for v in value)
                continue
            entry = _SECTION_KEYS.get((section, key))
            if entry is None:
                raise ConfigError(f"unknown config key [{section}] {key}")
            name, caster = entry
            assert name in known_fields
            try:
                if caster is bool:
                    if not isinstance(value, bool):
                        raise ValueError("expected true/false")
                    cast = value
                elif caster is Path:
                    cast = Path(value)
                else:
                    cast = caster(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
            setattr(cfg, name, cast)

    if base_dir is not None:
        for name in ("rainy_dir", "clean_dir", "output_root"):
            p = getattr(cfg, name)
            if not p.is_absolute():
                setattr(cfg, name, base_dir / p)
        if cfg.pairs_csv is not None and not cfg.pairs_csv.is_absolute():
            cfg.pairs_csv = base_dir / cfg.pairs_csv
    return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    sections = parse_config_text(path.read_text(encoding="utf-8"))
    return config_from_sections(sections, base_dir=path.parent)
