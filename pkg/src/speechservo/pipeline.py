"""End-to-end wiring from WAV files to features, queries and match results."""

from __future__ import annotations

from .audio_io import (FrameSeries, SampleBuffer, frame_signal, load_audio,
                       pre_emphasize, quantize_bits)
from .config import Config
from .endpoint import (EnergyVariant, ShortTimeProfile, Thresholds,
                       calibrate_noise, derive_thresholds, detect_endpoints,
                       profile_frames)
from .errors import NoSpeech
from .lpcc import LpccSequence, extract_features
from .matcher import MatchResult, Template, match, reduce_to_template, train


def load_utterance(path, cfg: Config) -> SampleBuffer:
    """Read, optionally requantize, and pre-emphasize one recording."""
    buf = load_audio(path)
    if cfg.sample_bits < 16:
        buf = quantize_bits(buf, cfg.sample_bits)
    return pre_emphasize(buf, cfg.alpha)


def short_time_profile(buffer: SampleBuffer, cfg: Config) -> tuple[FrameSeries, ShortTimeProfile]:
    series = frame_signal(buffer, cfg.frame_len, cfg.hop)
    profile = profile_frames(series, EnergyVariant(cfg.energy_variant), cfg.max_frames)
    return series, profile


def resolve_thresholds(profile: ShortTimeProfile, cfg: Config) -> Thresholds:
    """Fixed thresholds from config when set, else derive from leading noise."""
    if cfg.m1 is not None:
        return Thresholds(m1=cfg.m1, m2=cfg.m2, m3=cfg.m3)
    noise = calibrate_noise(profile, cfg.noise_frames)
    return derive_thresholds(noise, cfg.k1, cfg.k2, cfg.k3, cfg.floor)


def utterance_features(path, cfg: Config) -> LpccSequence:
    """WAV file to cepstral vectors for the detected word."""
    buf = load_utterance(path, cfg)
    series, profile = short_time_profile(buf, cfg)
    thr = resolve_thresholds(profile, cfg)
    try:
        segment = detect_endpoints(profile, thr)
    except NoSpeech as exc:
        raise NoSpeech(f"{path}: {exc}") from None
    return extract_features(series, segment, cfg.p, cfg.window)


def utterance_query(path, cfg: Config) -> Template:
    """WAV file reduced to an m-segment query template."""
    features = utterance_features(path, cfg)
    return reduce_to_template(features, cfg.m, "query", cfg.segment_reduction)


def train_from_files(paths, label: str, cfg: Config) -> Template:
    """Build one word template from several recordings of it."""
    features = [utterance_features(p, cfg) for p in paths]
    return train(features, label, cfg.m, cfg.consistency_limit, cfg.segment_reduction)


def recognize_file(path, vocab: dict[str, Template], cfg: Config) -> MatchResult:
    """Match one recording against a trained vocabulary."""
    query = utterance_query(path, cfg)
    return match(query, vocab.values(), cfg.reject_threshold)
