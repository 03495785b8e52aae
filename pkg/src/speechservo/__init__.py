"""Isolated-word speech commands driving simulated PWM servo surfaces.

The pipeline: WAV ingestion and pre-emphasis (audio_io), energy and
zero-crossing endpoint detection (endpoint), frame-wise cepstral features
(lpcc), key-frame template training and matching (matcher), a binary
vocabulary store (store), and the servo surface model (servo). pipeline
wires them together; cli exposes the whole thing as a command-line tool.
"""

from .audio_io import (FrameSeries, SampleBuffer, frame_signal, load_audio,
                       pre_emphasize, quantize_bits, save_audio)
from .config import Config, load_config, validate, write_config
from .endpoint import (EnergyVariant, NoiseProfile, ShortTimeProfile,
                       SpeechSegment, Thresholds, calibrate_noise,
                       derive_thresholds, detect_endpoints, profile_frames,
                       short_time_energy, trace_endpoints, zero_crossing_rate)
from .errors import SpeechServoError
from .lpcc import (LpcCoeffs, LpccSequence, autocorrelate, extract_features,
                   levinson_durbin, lpc_to_lpcc)
from .matcher import (DiffTrace, MatchResult, NormalizedFeatures, Template,
                      build_template, delta_threshold, frame_diffs, match,
                      normalize, reduce_to_template, select_key_frames,
                      template_distance, train, trim_tail)
from .pipeline import (recognize_file, train_from_files, utterance_features,
                       utterance_query)
from .servo import (ChannelState, Command, PwmChannel, SurfaceState,
                    angle_to_pulse, apply_command, format_state, parse_state,
                    pulse_to_angle, render_pwm)
from .store import export_text, load_vocabulary, save_vocabulary

__version__ = "0.1.0"
