"""Deterministic synthetic command utterances for fixtures and demos.

Real cockpit recordings are not shipped with the package, so tests and the
README walkthrough generate small words instead: a pulse-train excitation
driven through a cascade of two-pole resonators, one cascade per syllable,
with room-tone noise before and after. The spectral envelopes are distinct
enough per command for the recognizer to separate them the same way it
would separate real words.

Run as a script to write a corpus:

    python -m speechservo.synth out_dir --per-label 4 --seed 7
"""

from __future__ import annotations

import argparse
import os

import numpy as np

from .audio_io import I16_MAX, I16_MIN, PIPELINE_RATE_HZ, SampleBuffer, save_audio

# formant triples per syllable; chosen for mutual spectral distance
WORDS = {
    "up": [(300, 2200, 3000), (650, 1050, 2600)],
    "down": [(750, 1200, 2500), (350, 850, 2300), (300, 2000, 3100)],
    "left_roll": [(450, 1800, 2700), (950, 1400, 2250)],
    "right_roll": [(320, 950, 2100), (560, 1700, 2900), (880, 1250, 2450)],
    "reset": [(520, 1500, 2500), (300, 2350, 3150)],
}

PITCH_HZ = {
    "up": 112.0,
    "down": 126.0,
    "left_roll": 118.0,
    "right_roll": 134.0,
    "reset": 105.0,
}

LEAD_S = 0.45    # room tone before the word; covers the calibration frames
TAIL_S = 0.25
WORD_S = 0.72
PEAK = 6000.0
ROOM_SIGMA = 25.0


def _resonator_poly(freqs, rate: int, radius: float = 0.97) -> np.ndarray:
    """Denominator polynomial of a cascade of two-pole resonators."""
    den = np.array([1.0])
    for f in freqs:
        theta = 2.0 * np.pi * f / rate
        den = np.convolve(den, [1.0, -2.0 * radius * np.cos(theta), radius * radius])
    return den


def _ar_filter(x: np.ndarray, den: np.ndarray) -> np.ndarray:
    y = np.zeros_like(x)
    taps = len(den) - 1
    for n in range(len(x)):
        acc = x[n]
        for k in range(1, min(taps, n) + 1):
            acc -= den[k] * y[n - k]
        y[n] = acc
    return y


def _syllable(freqs, n: int, pitch_hz: float, rate: int, rng) -> np.ndarray:
    period = max(2, round(rate / pitch_hz))
    x = rng.normal(0.0, 0.02, n)
    for i in range(0, n, period):
        x[i] += 1.0 + rng.normal(0.0, 0.05)
    y = _ar_filter(x, _resonator_poly(freqs, rate))
    rms = np.sqrt(np.mean(y * y))
    if rms > 0.0:
        y /= rms
    # short raised-cosine edges avoid clicks between syllables
    edge = min(n // 4, round(0.010 * rate))
    if edge > 0:
        ramp = 0.5 - 0.5 * np.cos(np.linspace(0.0, np.pi, edge))
        y[:edge] *= ramp
        y[-edge:] *= ramp[::-1]
    return y


def synth_utterance(label: str, variant: int, seed: int = 7,
                    rate: int = PIPELINE_RATE_HZ,
                    lead_s: float = LEAD_S, tail_s: float = TAIL_S) -> SampleBuffer:
    """One deterministic utterance of a command word.

    variant picks the delivery: duration and formants jitter a few percent
    so the four training passes are similar but not identical.
    """
    if label not in WORDS:
        raise ValueError(f"unknown word {label!r}, have {sorted(WORDS)}")
    word_index = sorted(WORDS).index(label)
    rng = np.random.default_rng([seed, word_index, variant])

    stretch = rng.uniform(0.96, 1.04)
    syllables = []
    for freqs in WORDS[label]:
        jittered = [f * rng.uniform(0.985, 1.015) for f in freqs]
        n = round(WORD_S * stretch * rate / len(WORDS[label]))
        pitch = PITCH_HZ[label] * rng.uniform(0.97, 1.03)
        syllables.append(_syllable(jittered, n, pitch, rate, rng))
    word = np.concatenate(syllables)
    word *= PEAK / np.max(np.abs(word))

    lead = rng.normal(0.0, ROOM_SIGMA, round(lead_s * rate))
    tail = rng.normal(0.0, ROOM_SIGMA, round(tail_s * rate))
    floor = rng.normal(0.0, ROOM_SIGMA, len(word))
    signal = np.concatenate([lead, word + floor, tail])
    samples = np.clip(np.round(signal), I16_MIN, I16_MAX).astype(np.int16)
    return SampleBuffer(samples, rate)


def add_noise_snr(buffer: SampleBuffer, snr_db: float, seed: int) -> SampleBuffer:
    """Additive white noise sized against the whole-buffer RMS."""
    rng = np.random.default_rng(seed)
    x = buffer.samples.astype(np.float64)
    rms = np.sqrt(np.mean(x * x))
    sigma = rms / (10.0 ** (snr_db / 20.0))
    noisy = x + rng.normal(0.0, sigma, len(x))
    samples = np.clip(np.round(noisy), I16_MIN, I16_MAX).astype(np.int16)
    return SampleBuffer(samples, buffer.rate_hz)


def synth_burst(total_frames: int, burst_start: int, burst_frames: int,
                frame_len: int = 256, rate: int = PIPELINE_RATE_HZ,
                noise_sigma: float = 100.0, tone_amp: float = 3000.0,
                tone_hz: float = 1000.0, seed: int = 0):
    """Noise | tone burst | noise test signal with known frame boundaries.

    Returns (SampleBuffer, first_burst_frame, last_burst_frame). The burst
    start is jittered within its first frame so boundaries do not align
    with the framing grid exactly.
    """
    rng = np.random.default_rng(seed)
    n = total_frames * frame_len
    x = rng.normal(0.0, noise_sigma, n)
    start = burst_start * frame_len + int(rng.integers(0, frame_len // 4))
    stop = min(start + burst_frames * frame_len, n)
    tt = np.arange(stop - start) / rate
    x[start:stop] += tone_amp * np.sin(2.0 * np.pi * tone_hz * tt)
    samples = np.clip(np.round(x), I16_MIN, I16_MAX).astype(np.int16)
    first = start // frame_len
    last = (stop - 1) // frame_len
    return SampleBuffer(samples, rate), first, last


def write_corpus(out_dir, per_label: int = 4, seed: int = 7,
                 labels=None) -> list[tuple[str, str]]:
    """Write WAV files plus a manifest.csv; returns (filename, label) pairs."""
    labels = sorted(WORDS) if labels is None else list(labels)
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for label in labels:
        for k in range(per_label):
            name = f"{label}_{k:02d}.wav"
            save_audio(synth_utterance(label, k, seed), os.path.join(out_dir, name))
            entries.append((name, label))
    with open(os.path.join(out_dir, "manifest.csv"), "w", encoding="utf-8") as fh:
        for name, label in entries:
            fh.write(f"{name},{label}\n")
    return entries


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="write a synthetic command-word corpus")
    parser.add_argument("out_dir")
    parser.add_argument("--per-label", type=int, default=4)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    entries = write_corpus(args.out_dir, args.per_label, args.seed)
    print(f"wrote {len(entries)} files and manifest.csv to {args.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
