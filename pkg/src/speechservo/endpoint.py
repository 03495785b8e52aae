"""Short-time energy / zero-crossing analysis and two-stage endpoint search.

Word boundaries are found with a dual threshold scheme: a high energy
threshold locates the loud core of the word, a lower one grows it outward,
and a zero-crossing threshold finally pulls in weak fricative edges.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .audio_io import FrameSeries
from .errors import NoSpeech, TooFewFrames

log = logging.getLogger(__name__)

# 10 leading noise frames plus 52 utterance frames; longer input is truncated.
MAX_ANALYSIS_FRAMES = 62
NOISE_FRAMES = 10


class EnergyVariant(Enum):
    SQUARE = "square"
    ABS_SUM = "abs_sum"
    LOG_GUARDED = "log_guarded"


@dataclass(frozen=True)
class ShortTimeProfile:
    """Per-frame energy and zero-crossing rate for one utterance."""

    energy: np.ndarray
    zcr: np.ndarray
    variant: EnergyVariant

    def __len__(self) -> int:
        return len(self.energy)


@dataclass(frozen=True)
class NoiseProfile:
    mean_energy: float
    mean_zcr: float
    frames_used: int


@dataclass(frozen=True)
class Thresholds:
    """m1: word core energy, m2: word extent energy, m3: zero-crossing edge."""

    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        if not (self.m1 > self.m2 > 0.0):
            raise ValueError(f"need m1 > m2 > 0, got m1={self.m1} m2={self.m2}")
        if self.m3 <= 0.0:
            raise ValueError(f"need m3 > 0, got {self.m3}")


@dataclass(frozen=True)
class SpeechSegment:
    """Inclusive frame index range holding one word."""

    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame < 0 or self.start_frame > self.end_frame:
            raise ValueError(f"bad segment [{self.start_frame}, {self.end_frame}]")

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1


@dataclass(frozen=True)
class EndpointTrace:
    """All six boundary points of the two-stage search, for inspection."""

    a: int  # first / last frame of the highest-energy run over m1
    b: int
    c: int  # after growing [a, b] outward while energy stays over m2
    d: int
    e: int  # after growing [c, d] outward while zcr stays over m3
    f: int


def short_time_energy(frame, variant: EnergyVariant = EnergyVariant.ABS_SUM) -> float:
    """Windowed short-time energy of one frame.

    The window is flat with height 1/(2N), N being the frame length, so all
    variants stay bounded regardless of frame size:

        square:      sum((x*w)^2)
        abs_sum:     sum(|x*w|)
        log_guarded: sum(log(1 + (x*w)^2))

    abs_sum is the default; the squared form exaggerates level changes and
    the guarded log compresses them.
    """
    x = np.asarray(frame, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty frame")
    xw = x * (1.0 / (2.0 * x.size))
    if variant is EnergyVariant.SQUARE:
        return float(np.sum(xw * xw))
    if variant is EnergyVariant.ABS_SUM:
        return float(np.sum(np.abs(xw)))
    if variant is EnergyVariant.LOG_GUARDED:
        return float(np.sum(np.log1p(xw * xw)))
    raise ValueError(f"unknown energy variant {variant!r}")


def zero_crossing_rate(frame) -> float:
    """Sign-flip count scaled by 1/(2N); 0 for constant-sign frames.

    A sample counts as non-negative when x >= 0, so each flip contributes
    exactly 1 to the raw count. The first sample has no predecessor and
    contributes nothing.
    """
    x = np.asarray(frame, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty frame")
    s = np.where(x >= 0.0, 1.0, 0.0)
    return float(np.sum(np.abs(np.diff(s))) / (2.0 * x.size))


def profile_frames(series: FrameSeries,
                   variant: EnergyVariant = EnergyVariant.ABS_SUM,
                   max_frames: int | None = MAX_ANALYSIS_FRAMES) -> ShortTimeProfile:
    """Energy and zcr per frame, truncated to the analysis window cap."""
    frames = series.frames
    if max_frames is not None and len(frames) > max_frames:
        log.warning("analysis window capped at %d frames (%d supplied)",
                    max_frames, len(frames))
        frames = frames[:max_frames]
    energy = np.array([short_time_energy(f, variant) for f in frames], dtype=np.float64)
    zcr = np.array([zero_crossing_rate(f) for f in frames], dtype=np.float64)
    return ShortTimeProfile(energy, zcr, variant)


def calibrate_noise(profile: ShortTimeProfile, n_frames: int = NOISE_FRAMES) -> NoiseProfile:
    """Mean energy and zcr over the leading noise-only frames."""
    if n_frames < 1:
        raise ValueError("n_frames must be positive")
    if len(profile) < n_frames:
        raise TooFewFrames(
            f"noise calibration needs {n_frames} frames, profile has {len(profile)}")
    return NoiseProfile(
        mean_energy=float(profile.energy[:n_frames].mean()),
        mean_zcr=float(profile.zcr[:n_frames].mean()),
        frames_used=n_frames,
    )


def derive_thresholds(noise: NoiseProfile,
                      k1: float = 4.0, k2: float = 2.0, k3: float = 3.0,
                      floor: float = 1e-6) -> Thresholds:
    """Scale the noise means into the three detection thresholds.

    m2 = max(k2 * mean_energy, floor), m1 = k1 * m2, and
    m3 = max(k3 * mean_zcr, floor). The floor keeps digital silence from
    producing zero thresholds.
    """
    if k1 <= 1.0:
        raise ValueError("k1 must exceed 1 so that m1 > m2")
    if k2 < 1.0 or k3 < 1.0:
        raise ValueError("k2 and k3 must be at least 1")
    if floor <= 0.0:
        raise ValueError("floor must be positive")
    m2 = max(k2 * noise.mean_energy, floor)
    return Thresholds(m1=k1 * m2, m2=m2, m3=max(k3 * noise.mean_zcr, floor))


def trace_endpoints(profile: ShortTimeProfile, thr: Thresholds) -> EndpointTrace:
    """Run the two-stage search and return every intermediate boundary.

    Stage one picks the maximal run of frames with energy >= m1 carrying the
    largest total energy (earliest run wins ties), then widens it while the
    neighbouring energy stays >= m2. Stage two widens the result again while
    the neighbouring zero-crossing rate stays >= m3. Both stages clamp at
    the profile edges.
    """
    energy = profile.energy
    zcr = profile.zcr
    n = len(energy)
    hot = energy >= thr.m1
    if not hot.any():
        raise NoSpeech(f"no frame energy reached m1={thr.m1:.6g}")

    best = None  # (total, start, stop) with stop inclusive
    i = 0
    while i < n:
        if not hot[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and hot[j + 1]:
            j += 1
        total = float(energy[i:j + 1].sum())
        if best is None or total > best[0]:
            best = (total, i, j)
        i = j + 1
    _, a, b = best

    c = a
    while c > 0 and energy[c - 1] >= thr.m2:
        c -= 1
    d = b
    while d + 1 < n and energy[d + 1] >= thr.m2:
        d += 1

    e = c
    while e > 0 and zcr[e - 1] >= thr.m3:
        e -= 1
    f = d
    while f + 1 < n and zcr[f + 1] >= thr.m3:
        f += 1

    return EndpointTrace(a=a, b=b, c=c, d=d, e=e, f=f)


def detect_endpoints(profile: ShortTimeProfile, thr: Thresholds) -> SpeechSegment:
    """Word boundaries from the two-stage search, as an inclusive segment."""
    t = trace_endpoints(profile, thr)
    return SpeechSegment(start_frame=t.e, end_frame=t.f)


def write_profile_csv(profile: ShortTimeProfile, thr: Thresholds, fh) -> None:
    """Dump per-frame values and threshold crossings for offline plotting."""
    writer = csv.writer(fh)
    writer.writerow(["frame", "energy", "zcr", "ge_m1", "ge_m2", "ge_m3"])
    for i, (en, zc) in enumerate(zip(profile.energy, profile.zcr)):
        writer.writerow([i, repr(float(en)), repr(float(zc)),
                         int(en >= thr.m1), int(en >= thr.m2), int(zc >= thr.m3)])
