"""Exception types shared across the package."""


class MaskedProsodyError(Exception):
    """Base class for all package-specific errors."""


class AudioFormatError(MaskedProsodyError):
    """Malformed or non-RIFF/WAVE input file."""


class UnsupportedChannelsError(AudioFormatError):
    """WAV file is not mono."""


class UnsupportedEncodingError(AudioFormatError):
    """WAV file is not 16-bit PCM."""


class EmptyTrackError(MaskedProsodyError):
    """Waveform too short to produce a single analysis frame."""


class DegenerateTrackError(MaskedProsodyError):
    """Contour has no defined frames to normalize over."""


class InvalidCodebookError(MaskedProsodyError):
    """Codebook parameters are unusable (c < 2 or bad support)."""


class InvalidTokenError(MaskedProsodyError):
    """Token outside the codebook range (e.g. mask sentinel where a value is required)."""


class AlignmentError(MaskedProsodyError):
    """Per-frame sequences that must share a length do not."""


class UndefinedLossError(MaskedProsodyError):
    """Loss requested over zero masked positions."""


class GradientDiagnosticsError(MaskedProsodyError):
    """Non-finite gradient, with the offending parameter name in the message."""


class DivergenceError(MaskedProsodyError):
    """Training loss blew up past the divergence guard."""


class InvalidSpanError(MaskedProsodyError):
    """Empty or out-of-range frame span."""


class DegenerateLabelsError(MaskedProsodyError):
    """Probe training data covers fewer than two classes."""


class UndefinedMetricError(MaskedProsodyError):
    """Metric has no defined value for the given inputs (e.g. zero variance)."""


class ParseError(MaskedProsodyError):
    """Annotation file violates its documented format."""


class CheckpointError(MaskedProsodyError):
    """Checkpoint container is malformed or version-incompatible."""


class MissingArtifactError(MaskedProsodyError):
    """A pipeline stage requires an artifact that has not been produced."""
