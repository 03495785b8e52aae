"""Exception types shared across the package."""


class SpeechServoError(Exception):
    """Base class for every error this package raises on purpose."""


# audio ingestion

class MalformedContainer(SpeechServoError):
    """Not a RIFF/WAVE container carrying 16-bit linear PCM."""


class UnsupportedRate(SpeechServoError):
    """Sample rate other than the 8 kHz the pipeline is built for."""


class UnsupportedChannels(SpeechServoError):
    """Multi-channel audio is rejected outright, never mixed down."""


# endpoint detection

class TooFewFrames(SpeechServoError):
    """Input shorter than the requested noise calibration window."""


class NoSpeech(SpeechServoError):
    """No frame energy ever reached the upper threshold."""


# feature extraction

class FrameTooShort(SpeechServoError):
    """Frame length must exceed the prediction order."""


class ZeroEnergyFrame(SpeechServoError):
    """Zero-lag autocorrelation was not positive."""


# template matching

class TooFewFramesForM(SpeechServoError):
    """Utterance has fewer difference values than key segments requested."""


class InconsistentTraining(SpeechServoError):
    """Training utterances disagree too much to average into one template."""


class EmptyTemplateSet(SpeechServoError):
    """Matching was attempted against an empty vocabulary."""


# vocabulary store

class IoFailure(SpeechServoError):
    """Underlying read or write failed."""


class MixedDimensions(SpeechServoError):
    """Templates with different segment counts or feature orders were combined."""


class UnsupportedVersion(SpeechServoError):
    """Vocabulary file declares a format version this build does not read."""


class CorruptEntry(SpeechServoError):
    """Vocabulary file failed structural or checksum validation."""


# servo mapping

class OutOfRange(SpeechServoError):
    """Pulse width outside the 0.5 .. 2.5 ms control range."""


# configuration

class ConfigError(SpeechServoError):
    """Bad key, bad value, or unreadable configuration file."""
