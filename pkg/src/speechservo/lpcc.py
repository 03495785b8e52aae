"""Frame-wise linear prediction and the cepstral recursion built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import FrameSeries
from .endpoint import SpeechSegment
from .errors import FrameTooShort, ZeroEnergyFrame

DEFAULT_ORDER = 12


@dataclass(frozen=True)
class LpcCoeffs:
    """Predictor coefficients a(1)..a(p) for x_hat(n) = sum a(k) x(n-k).

    degenerate is set when the recursion stopped early because the
    prediction error variance dropped to zero or below; coefficients past
    that point are left at zero.
    """

    a: np.ndarray
    order: int
    degenerate: bool = False


@dataclass(frozen=True)
class LpccSequence:
    """Cepstral vectors for the frames of one speech segment.

    zero_frames marks frames whose autocorrelation had no energy; their
    vectors are all zero and are carried through rather than dropped.
    """

    vectors: np.ndarray      # (n_frames, order)
    zero_frames: np.ndarray  # bool, (n_frames,)

    @property
    def frame_count(self) -> int:
        return self.vectors.shape[0]

    @property
    def order(self) -> int:
        return self.vectors.shape[1]


def autocorrelate(frame, order: int, window: str = "hamming") -> np.ndarray:
    """Autocorrelation lags r(0)..r(order) of one windowed frame.

    r(k) = sum_n x(n) x(n-k) over the frame after windowing. A Hamming
    window is applied by default; pass "rectangular" to skip it.
    """
    x = np.asarray(frame, dtype=np.float64)
    if x.size <= order:
        raise FrameTooShort(f"frame of {x.size} samples cannot support order {order}")
    if window == "hamming":
        x = x * np.hamming(x.size)
    elif window != "rectangular":
        raise ValueError(f"unknown window {window!r}")
    full = np.correlate(x, x, mode="full")
    return full[x.size - 1:x.size + order].copy()


def levinson_durbin(r) -> LpcCoeffs:
    """Solve the autocorrelation normal equations by Levinson-Durbin.

    Returns coefficients under the plus convention, i.e. the predictor is
    x_hat(n) = sum_k a(k) x(n-k). If the error variance hits zero or goes
    negative at any order, the recursion stops there, the remaining
    coefficients stay zero and the result is flagged degenerate.

    Raises:
        ZeroEnergyFrame: r(0) <= 0, nothing to predict.
    """
    r = np.asarray(r, dtype=np.float64)
    order = r.size - 1
    if order < 1:
        raise ValueError("need at least lags r(0) and r(1)")
    if r[0] <= 0.0:
        raise ZeroEnergyFrame(f"r(0) = {r[0]:.6g} is not positive")

    a = np.zeros(order, dtype=np.float64)
    err = float(r[0])
    degenerate = False
    for i in range(1, order + 1):
        if err <= 0.0:
            degenerate = True
            break
        k = (r[i] - np.dot(a[:i - 1], r[i - 1:0:-1])) / err
        prev = a[:i - 1].copy()
        a[i - 1] = k
        if i > 1:
            a[:i - 1] = prev - k * prev[::-1]
        err *= (1.0 - k * k)
    return LpcCoeffs(a=a, order=order, degenerate=degenerate)


def lpc_to_lpcc(coeffs: LpcCoeffs) -> np.ndarray:
    """Cepstral coefficients c(1)..c(p) from the predictor.

    c(1) = a(1), then for n = 2..p

        c(n) = sum_{k=1}^{n-1} (1 - k/n) c(n-k) a(k)  +  a(n)

    evaluated with ascending k so results are bit-reproducible.
    """
    a = coeffs.a
    p = coeffs.order
    c = np.zeros(p, dtype=np.float64)
    if p == 0:
        return c
    c[0] = a[0]
    for n in range(2, p + 1):
        acc = 0.0
        for k in range(1, n):
            acc += (1.0 - k / n) * c[n - k - 1] * a[k - 1]
        c[n - 1] = acc + a[n - 1]
    return c


def extract_features(frames: FrameSeries, segment: SpeechSegment,
                     order: int = DEFAULT_ORDER, window: str = "hamming") -> LpccSequence:
    """One cepstral vector per frame of the segment, endpoints inclusive.

    Frames with no energy yield all-zero vectors and are flagged in
    zero_frames instead of aborting the whole utterance.
    """
    if segment.end_frame >= len(frames):
        raise ValueError(
            f"segment end {segment.end_frame} outside series of {len(frames)} frames")
    n = segment.n_frames
    vectors = np.zeros((n, order), dtype=np.float64)
    zero = np.zeros(n, dtype=bool)
    for i, idx in enumerate(range(segment.start_frame, segment.end_frame + 1)):
        r = autocorrelate(frames.frames[idx], order, window)
        if r[0] <= 0.0:
            zero[i] = True
            continue
        vectors[i] = lpc_to_lpcc(levinson_durbin(r))
    return LpccSequence(vectors=vectors, zero_frames=zero)
