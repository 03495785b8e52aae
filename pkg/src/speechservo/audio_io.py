"""WAV ingestion, pre-emphasis and fixed-length framing.

All values are immutable once constructed; every operation returns a new
object instead of mutating its input.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import MalformedContainer, UnsupportedChannels, UnsupportedRate

PIPELINE_RATE_HZ = 8000

I16_MIN = -32768
I16_MAX = 32767


@dataclass(frozen=True)
class SampleBuffer:
    """Mono PCM samples plus the rate they were captured at."""

    samples: np.ndarray  # int16, shape (n,)
    rate_hz: int

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.rate_hz


@dataclass(frozen=True)
class FrameSeries:
    """Frames cut from a buffer; the tail remainder is discarded."""

    frames: np.ndarray  # int16, shape (n_frames, frame_len)
    frame_len: int
    hop: int

    def __len__(self) -> int:
        return len(self.frames)


def load_audio(path) -> SampleBuffer:
    """Read a WAV file, accepting only 16-bit linear PCM, mono, 8000 Hz.

    Args:
        path: file system path to a RIFF/WAVE file.

    Returns:
        SampleBuffer with int16 samples.

    Raises:
        MalformedContainer: not RIFF/WAVE, or payload is not 16-bit PCM.
        UnsupportedRate: sample rate differs from 8000 Hz.
        UnsupportedChannels: more than one channel.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedContainer(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    off = 12
    while off + 8 <= len(data):
        chunk_id = data[off:off + 4]
        (size,) = struct.unpack_from("<I", data, off + 4)
        body = data[off + 8:off + 8 + size]
        if len(body) < size:
            raise MalformedContainer(f"{path}: truncated {chunk_id!r} chunk")
        if chunk_id == b"fmt " and fmt is None:
            fmt = body
        elif chunk_id == b"data" and payload is None:
            payload = body
        # chunks are word aligned
        off += 8 + size + (size & 1)

    if fmt is None or payload is None:
        raise MalformedContainer(f"{path}: missing fmt or data chunk")
    if len(fmt) < 16:
        raise MalformedContainer(f"{path}: fmt chunk too small")
    tag, channels, rate, _byte_rate, _align, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if tag != 1:
        raise MalformedContainer(f"{path}: format tag {tag}, only linear PCM accepted")
    if bits != 16:
        raise MalformedContainer(f"{path}: {bits}-bit samples, only 16-bit accepted")
    if channels != 1:
        raise UnsupportedChannels(f"{path}: {channels} channels, only mono accepted")
    if rate != PIPELINE_RATE_HZ:
        raise UnsupportedRate(f"{path}: {rate} Hz, pipeline requires {PIPELINE_RATE_HZ} Hz")
    if len(payload) % 2:
        raise MalformedContainer(f"{path}: odd data chunk size")

    samples = np.frombuffer(payload, dtype="<i2").astype(np.int16)
    return SampleBuffer(samples, rate)


def save_audio(buffer: SampleBuffer, path) -> None:
    """Write a canonical 44-byte-header WAV file. Round-trips load_audio exactly."""
    payload = np.asarray(buffer.samples, dtype="<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, buffer.rate_hz, buffer.rate_hz * 2, 2, 16,
        b"data", len(payload),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def _pre_emphasis_float(samples, alpha: float) -> np.ndarray:
    """The filter y[n] = x[n] - alpha*x[n-1] in float64, x[-1] taken as 0."""
    x = np.asarray(samples, dtype=np.float64)
    y = x.copy()
    y[1:] -= alpha * x[:-1]
    return y


def pre_emphasize(buffer: SampleBuffer, alpha: float = 0.95) -> SampleBuffer:
    """High-pass the buffer with y[n] = x[n] - alpha*x[n-1].

    Evaluated in float64, then rounded toward zero and saturated back into
    the 16-bit sample range.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    y = _pre_emphasis_float(buffer.samples, alpha)
    out = np.clip(np.trunc(y), I16_MIN, I16_MAX).astype(np.int16)
    return SampleBuffer(out, buffer.rate_hz)


def quantize_bits(buffer: SampleBuffer, bits: int) -> SampleBuffer:
    """Keep only the top `bits` of each sample (coarse-converter emulation).

    Low bits are zeroed by an arithmetic shift, so negative samples floor.
    """
    if not 2 <= bits <= 16:
        raise ValueError(f"bits must lie in [2, 16], got {bits}")
    if bits == 16:
        return buffer
    shift = 16 - bits
    q = (buffer.samples.astype(np.int32) >> shift) << shift
    return SampleBuffer(q.astype(np.int16), buffer.rate_hz)


def frame_signal(buffer: SampleBuffer, frame_len: int, hop: int) -> FrameSeries:
    """Cut the buffer into frames of frame_len samples every hop samples.

    Yields (len - frame_len) // hop + 1 frames, or none if the buffer is
    shorter than one frame. Frame i starts at sample i*hop.
    """
    if frame_len < 1 or hop < 1:
        raise ValueError("frame_len and hop must be positive")
    x = buffer.samples
    if len(x) < frame_len:
        frames = np.empty((0, frame_len), dtype=np.int16)
    else:
        n = (len(x) - frame_len) // hop + 1
        idx = np.arange(frame_len)[None, :] + hop * np.arange(n)[:, None]
        frames = x[idx]
    return FrameSeries(frames, frame_len, hop)
