"""Pulse-width servo mapping, PWM rendering, and the simulated surfaces.

One standard RC servo per control surface: elevator plus left and right
ailerons. Angles map linearly onto pulse widths, 0 deg at 0.5 ms up to
180 deg at 2.5 ms, repeated every 20 ms.

Sign conventions: 90 deg is the neutral surface position. "up" raises the
elevator angle, "down" lowers it (leading edge up). "left_roll" raises the
left aileron and lowers the right one by the same step; "right_roll"
mirrors that.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import OutOfRange

PULSE_MIN_MS = 0.5
PULSE_MAX_MS = 2.5
PERIOD_MS = 20.0
FULL_RANGE_DEG = 180.0
NEUTRAL_DEG = 90.0
DEFAULT_STEP_DEG = 15.0
MIN_RENDER_RATE_HZ = 10_000  # need 0.1 ms resolution at minimum


class Command(Enum):
    UP = "up"
    DOWN = "down"
    LEFT_ROLL = "left_roll"
    RIGHT_ROLL = "right_roll"
    RESET = "reset"


def angle_to_pulse(angle_deg: float) -> float:
    """Map 0..180 deg linearly onto 0.5..2.5 ms. Input is clamped."""
    a = min(max(float(angle_deg), 0.0), FULL_RANGE_DEG)
    return PULSE_MIN_MS + (a / FULL_RANGE_DEG) * (PULSE_MAX_MS - PULSE_MIN_MS)


def pulse_to_angle(pulse_ms: float) -> float:
    """Inverse of angle_to_pulse.

    Raises:
        OutOfRange: pulse outside [0.5, 2.5] ms.
    """
    if not PULSE_MIN_MS <= pulse_ms <= PULSE_MAX_MS:
        raise OutOfRange(f"pulse {pulse_ms} ms outside [{PULSE_MIN_MS}, {PULSE_MAX_MS}]")
    return (pulse_ms - PULSE_MIN_MS) / (PULSE_MAX_MS - PULSE_MIN_MS) * FULL_RANGE_DEG


@dataclass(frozen=True)
class PwmChannel:
    pulse_ms: float
    period_ms: float = PERIOD_MS

    def __post_init__(self):
        if not PULSE_MIN_MS <= self.pulse_ms <= PULSE_MAX_MS:
            raise OutOfRange(f"pulse {self.pulse_ms} ms outside servo range")
        if self.period_ms <= self.pulse_ms:
            raise ValueError("period must exceed the pulse width")


@dataclass(frozen=True)
class ChannelState:
    angle_deg: float
    pwm: PwmChannel

    @classmethod
    def at_angle(cls, angle_deg: float) -> "ChannelState":
        a = min(max(float(angle_deg), 0.0), FULL_RANGE_DEG)
        return cls(angle_deg=a, pwm=PwmChannel(angle_to_pulse(a)))


@dataclass(frozen=True)
class SurfaceState:
    elevator: ChannelState
    left_aileron: ChannelState
    right_aileron: ChannelState
    step_deg: float = DEFAULT_STEP_DEG

    @classmethod
    def neutral(cls, step_deg: float = DEFAULT_STEP_DEG) -> "SurfaceState":
        mid = ChannelState.at_angle(NEUTRAL_DEG)
        return cls(elevator=mid, left_aileron=mid, right_aileron=mid,
                   step_deg=step_deg)


def check_consistent(state: SurfaceState) -> None:
    """Assert every channel's pulse agrees with its angle.

    Raises ValueError when any channel has drifted; used after every
    state transition in tests.
    """
    for name in ("elevator", "left_aileron", "right_aileron"):
        ch: ChannelState = getattr(state, name)
        if not 0.0 <= ch.angle_deg <= FULL_RANGE_DEG:
            raise ValueError(f"{name} angle {ch.angle_deg} outside [0, 180]")
        expect = angle_to_pulse(ch.angle_deg)
        if abs(ch.pwm.pulse_ms - expect) > 1e-12:
            raise ValueError(
                f"{name} pulse {ch.pwm.pulse_ms} ms inconsistent with "
                f"{ch.angle_deg} deg (expected {expect} ms)")


def apply_command(state: SurfaceState, cmd: Command,
                  mode: str = "incremental") -> SurfaceState:
    """Move the surfaces for one recognized command.

    incremental mode steps from the current posture; absolute mode steps
    from neutral, so repeating a command holds the same deflection. Angles
    clamp to [0, 180] and reset always returns to 90/90/90.
    """
    if mode not in ("incremental", "absolute"):
        raise ValueError(f"unknown actuation mode {mode!r}")
    step = state.step_deg
    if cmd is Command.RESET:
        return SurfaceState.neutral(step)

    def clamp(a: float) -> float:
        return min(max(a, 0.0), FULL_RANGE_DEG)

    elev = state.elevator.angle_deg
    left = state.left_aileron.angle_deg
    right = state.right_aileron.angle_deg
    if mode == "absolute":
        base_e = base_l = base_r = NEUTRAL_DEG
    else:
        base_e, base_l, base_r = elev, left, right

    if cmd is Command.UP:
        elev = clamp(base_e + step)
    elif cmd is Command.DOWN:
        elev = clamp(base_e - step)
    elif cmd is Command.LEFT_ROLL:
        left = clamp(base_l + step)
        right = clamp(base_r - step)
    elif cmd is Command.RIGHT_ROLL:
        left = clamp(base_l - step)
        right = clamp(base_r + step)
    else:
        raise ValueError(f"unknown command {cmd!r}")

    return SurfaceState(
        elevator=ChannelState.at_angle(elev),
        left_aileron=ChannelState.at_angle(left),
        right_aileron=ChannelState.at_angle(right),
        step_deg=step,
    )


def render_pwm(channel: PwmChannel, sample_rate_hz: int, n_periods: int) -> np.ndarray:
    """Sample the PWM line as 0/1 values.

    Each period is round(period_ms * rate) samples with the first
    round(pulse_ms * rate) of them high, so the duty cycle is exact to
    within one sample per period.
    """
    if sample_rate_hz < MIN_RENDER_RATE_HZ:
        raise ValueError(f"sample rate {sample_rate_hz} below {MIN_RENDER_RATE_HZ} Hz")
    if n_periods < 0:
        raise ValueError("n_periods must be non-negative")
    period = round(channel.period_ms / 1000.0 * sample_rate_hz)
    high = round(channel.pulse_ms / 1000.0 * sample_rate_hz)
    one = np.zeros(period, dtype=np.uint8)
    one[:high] = 1
    return np.tile(one, n_periods)


def format_state(state: SurfaceState) -> str:
    """One-line dump; float repr so parsing it back is lossless."""
    e, l, r = state.elevator, state.left_aileron, state.right_aileron
    return (f"elevator={e.angle_deg!r} left={l.angle_deg!r} right={r.angle_deg!r} "
            f"pulses={e.pwm.pulse_ms!r},{l.pwm.pulse_ms!r},{r.pwm.pulse_ms!r}")


def parse_state(line: str, step_deg: float = DEFAULT_STEP_DEG) -> SurfaceState:
    """Rebuild a SurfaceState from format_state output.

    Raises ValueError on any malformed or internally inconsistent line.
    """
    fields = {}
    for part in line.split():
        if "=" not in part:
            raise ValueError(f"unparseable state field {part!r}")
        key, _, value = part.partition("=")
        fields[key] = value
    try:
        angles = [float(fields[k]) for k in ("elevator", "left", "right")]
        pulses = [float(v) for v in fields["pulses"].split(",")]
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed state line {line!r}") from exc
    if len(pulses) != 3:
        raise ValueError(f"expected 3 pulses, got {len(pulses)}")
    channels = []
    for angle, pulse in zip(angles, pulses):
        if not 0.0 <= angle <= FULL_RANGE_DEG:
            raise ValueError(f"angle {angle} outside [0, {FULL_RANGE_DEG}]")
        if abs(angle_to_pulse(angle) - pulse) > 1e-9:
            raise ValueError(f"angle {angle} and pulse {pulse} disagree")
        channels.append(ChannelState(angle_deg=angle, pwm=PwmChannel(pulse)))
    return SurfaceState(elevator=channels[0], left_aileron=channels[1],
                        right_aileron=channels[2], step_deg=step_deg)


def write_waveform_csv(state: SurfaceState, sample_rate_hz: int,
                       n_periods: int, fh) -> None:
    """All three channel waveforms side by side, for plotting."""
    waves = [render_pwm(ch.pwm, sample_rate_hz, n_periods)
             for ch in (state.elevator, state.left_aileron, state.right_aileron)]
    writer = csv.writer(fh)
    writer.writerow(["sample", "time_ms", "elevator", "left", "right"])
    for i in range(len(waves[0])):
        writer.writerow([i, "%.6f" % (i * 1000.0 / sample_rate_hz),
                         waves[0][i], waves[1][i], waves[2][i]])
