"""WAV file input for the feature extractor.

Only RIFF/WAVE, 16-bit PCM, mono is accepted. The reader walks the chunk
list itself so that malformed headers, multi-channel files and non-PCM
encodings raise distinct errors instead of a generic parse failure.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AudioFormatError, UnsupportedChannelsError, UnsupportedEncodingError

PCM_FORMAT_TAG = 1
INT16_SCALE = 32768.0


@dataclass
class Waveform:
    """Mono audio samples in [-1, 1] at a fixed rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise AudioFormatError("waveform must be a non-empty 1-D sample array")
        if not np.all(np.isfinite(self.samples)):
            raise AudioFormatError("waveform contains non-finite samples")
        if self.sample_rate < 8000:
            raise AudioFormatError(f"sample rate {self.sample_rate} below 8 kHz minimum")

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate


def load_waveform(path) -> Waveform:
    """Read a RIFF/WAVE PCM16 mono file, scaling samples by 1/32768."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt " and fmt is None:
            if len(body) < 16:
                raise AudioFormatError(f"{path}: fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data" and data is None:
            if len(body) < chunk_size:
                raise AudioFormatError(f"{path}: data chunk truncated")
            data = body
        # chunks are word-aligned
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or data is None:
        raise AudioFormatError(f"{path}: missing fmt or data chunk")

    format_tag, channels, sample_rate, _, _, bits = fmt
    if format_tag != PCM_FORMAT_TAG:
        raise UnsupportedEncodingError(f"{path}: format tag {format_tag}, expected PCM")
    if channels != 1:
        raise UnsupportedChannelsError(f"{path}: {channels} channels, expected mono")
    if bits != 16:
        raise UnsupportedEncodingError(f"{path}: {bits}-bit samples, expected 16")

    ints = np.frombuffer(data[: (len(data) // 2) * 2], dtype="<i2")
    if ints.size == 0:
        raise AudioFormatError(f"{path}: empty data chunk")
    return Waveform(ints.astype(np.float64) / INT16_SCALE, sample_rate)


def save_waveform(path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float samples in [-1, 1] as a PCM16 mono WAV (test/synthesis helper)."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    ints = np.round(clipped * INT16_SCALE).clip(-32768, 32767).astype("<i2")
    payload = ints.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt = b"fmt " + struct.pack(
        "<IHHIIHH", 16, PCM_FORMAT_TAG, 1, sample_rate, sample_rate * 2, 2, 16
    )
    data = b"data" + struct.pack("<I", len(payload)) + payload
    Path(path).write_bytes(header + fmt + data)
