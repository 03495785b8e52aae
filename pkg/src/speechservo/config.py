"""Runtime configuration: defaults, file parsing, validation.

Config files hold one `key = value` per line; blank lines and lines
starting with # are skipped. Unknown keys are rejected so typos fail loud.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError

DEFAULT_CONFIG_FILENAME = "speechservo.cfg"

_ENERGY_VARIANTS = ("square", "abs_sum", "log_guarded")
_WINDOWS = ("hamming", "rectangular")
_ACTUATION_MODES = ("incremental", "absolute")
_REDUCTIONS = ("feature_mean", "diff_mean")

# keys whose value may be the word "none"
_OPTIONAL_FLOAT_KEYS = frozenset({"m1", "m2", "m3"})


@dataclass
class Config:
    # framing and pre-emphasis
    frame_len: int = 256
    hop: int = 256
    alpha: float = 0.95
    sample_bits: int = 16

    # endpoint detection
    energy_variant: str = "abs_sum"
    k1: float = 4.0
    k2: float = 2.0
    k3: float = 3.0
    floor: float = 1e-6
    noise_frames: int = 10
    max_frames: int = 62
    # fixed thresholds from a calibrate run; None means derive per file
    m1: float | None = None
    m2: float | None = None
    m3: float | None = None

    # features
    p: int = 12
    window: str = "hamming"

    # matching; thresholds calibrated on the synthetic acceptance corpus
    # (legitimate queries stay under 9.2 at 30 dB SNR, impostors above 12.5)
    m: int = 8
    reject_threshold: float = 10.0
    consistency_limit: float = 10.0
    segment_reduction: str = "feature_mean"
    train_count: int = 4

    # servo
    step_deg: float = 15.0
    actuation_mode: str = "incremental"

    # file locations
    vocab_path: str = "vocabulary.avtp"
    state_path: str = "surface_state.txt"


_FIELDS = {f.name: f for f in dataclasses.fields(Config)}


def _coerce(key: str, raw: str):
    field = _FIELDS[key]
    raw = raw.strip()
    if key in _OPTIONAL_FLOAT_KEYS:
        if raw.lower() in ("none", ""):
            return None
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number or 'none', got {raw!r}")
    if field.type in ("int", int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    if field.type in ("float", float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}")
    return raw


def apply_assignments(cfg: Config, pairs) -> Config:
    """Apply (key, raw_value) pairs onto a copy of cfg."""
    updates = {}
    for key, raw in pairs:
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _coerce(key, raw)
    return dataclasses.replace(cfg, **updates)


def load_config(path, base: Config | None = None) -> Config:
    """Parse a config file on top of the defaults (or a given base)."""
    cfg = base if base is not None else Config()
    pairs = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
        key, _, value = text.partition("=")
        pairs.append((key, value))
    return apply_assignments(cfg, pairs)


def write_config(cfg: Config, path) -> None:
    """Write every key so the file is a complete record of the run setup."""
    lines = ["# speechservo configuration\n"]
    for field in dataclasses.fields(Config):
        value = getattr(cfg, field.name)
        if value is None:
            value = "none"
        lines.append(f"{field.name} = {value}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(lines)


def validate(cfg: Config) -> Config:
    """Range-check every field; returns cfg so calls can chain."""
    def need(cond: bool, msg: str):
        if not cond:
            raise ConfigError(msg)

    need(cfg.frame_len >= 2, f"frame_len must be >= 2, got {cfg.frame_len}")
    need(cfg.hop >= 1, f"hop must be >= 1, got {cfg.hop}")
    need(0.0 <= cfg.alpha <= 1.0, f"alpha must lie in [0, 1], got {cfg.alpha}")
    need(cfg.sample_bits in (10, 16), f"sample_bits must be 10 or 16, got {cfg.sample_bits}")
    need(cfg.energy_variant in _ENERGY_VARIANTS,
         f"energy_variant must be one of {_ENERGY_VARIANTS}, got {cfg.energy_variant!r}")
    need(cfg.k1 > 1.0, f"k1 must exceed 1, got {cfg.k1}")
    need(cfg.k2 >= 1.0, f"k2 must be >= 1, got {cfg.k2}")
    need(cfg.k3 >= 1.0, f"k3 must be >= 1, got {cfg.k3}")
    need(cfg.floor > 0.0, f"floor must be positive, got {cfg.floor}")
    need(cfg.noise_frames >= 1, f"noise_frames must be >= 1, got {cfg.noise_frames}")
    need(cfg.max_frames > cfg.noise_frames,
         f"max_frames must exceed noise_frames, got {cfg.max_frames}")
    fixed = (cfg.m1, cfg.m2, cfg.m3)
    if any(v is not None for v in fixed):
        need(all(v is not None for v in fixed),
             "m1, m2, m3 must be set together or not at all")
        need(cfg.m1 > cfg.m2 > 0.0, f"need m1 > m2 > 0, got m1={cfg.m1} m2={cfg.m2}")
        need(cfg.m3 > 0.0, f"m3 must be positive, got {cfg.m3}")
    need(1 <= cfg.p <= 24, f"p must lie in [1, 24], got {cfg.p}")
    need(cfg.window in _WINDOWS, f"window must be one of {_WINDOWS}, got {cfg.window!r}")
    need(cfg.m in (8, 16), f"m must be 8 (single word) or 16 (paired), got {cfg.m}")
    need(cfg.reject_threshold > 0.0,
         f"reject_threshold must be positive, got {cfg.reject_threshold}")
    need(cfg.consistency_limit > 0.0,
         f"consistency_limit must be positive, got {cfg.consistency_limit}")
    need(cfg.segment_reduction in _REDUCTIONS,
         f"segment_reduction must be one of {_REDUCTIONS}, got {cfg.segment_reduction!r}")
    need(cfg.train_count >= 2, f"train_count must be >= 2, got {cfg.train_count}")
    need(0.0 < cfg.step_deg <= 180.0, f"step_deg must lie in (0, 180], got {cfg.step_deg}")
    need(cfg.actuation_mode in _ACTUATION_MODES,
         f"actuation_mode must be one of {_ACTUATION_MODES}, got {cfg.actuation_mode!r}")
    return cfg
