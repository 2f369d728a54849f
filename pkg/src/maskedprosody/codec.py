"""Uniform codebooks over a fixed support, and the three-stream token track.

Normalized pitch/energy contours are quantized on [-3, 3] (z-scored values
rarely leave that range; values outside clip to the edge bins). Voice
activity keeps its binary semantics by quantizing raw 0/1 values on its
own [0, 1] codebook, so only the two edge bins are ever occupied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, InvalidCodebookError, InvalidTokenError
from .features import ProsodyTrack

FEATURES = ("pitch", "energy", "vad")

DEFAULT_SUPPORT = (-3.0, 3.0)
VAD_SUPPORT = (0.0, 1.0)


@dataclass(frozen=True)
class Codebook:
    size: int
    lower_clip: float
    upper_clip: float

    def __post_init__(self):
        if self.size < 2:
            raise InvalidCodebookError(f"codebook size {self.size} < 2")
        if not self.lower_clip < self.upper_clip:
            raise InvalidCodebookError("lower_clip must be below upper_clip")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lower_clip, self.upper_clip, self.size + 1)

    @property
    def centers(self) -> np.ndarray:
        edges = self.edges
        return 0.5 * (edges[:-1] + edges[1:])

    @property
    def mask_token(self) -> int:
        return self.size


def build_codebook(c: int, lower_clip: float, upper_clip: float) -> Codebook:
    """c uniform-width bins spanning [lower_clip, upper_clip]."""
    return Codebook(c, lower_clip, upper_clip)


def default_codebooks(c: int) -> dict[str, Codebook]:
    """Per-feature codebooks: z-score support for pitch/energy, [0,1] for VAD."""
    return {
        "pitch": build_codebook(c, *DEFAULT_SUPPORT),
        "energy": build_codebook(c, *DEFAULT_SUPPORT),
        "vad": build_codebook(c, *VAD_SUPPORT),
    }


def quantize(values: np.ndarray, cb: Codebook) -> np.ndarray:
    """Bin indices by half-open intervals [edge_i, edge_{i+1}); clips outside support."""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot quantize non-finite values")
    tokens = np.searchsorted(cb.edges, values, side="right") - 1
    return np.clip(tokens, 0, cb.size - 1).astype(np.int64)


def dequantize(tokens: np.ndarray, cb: Codebook) -> np.ndarray:
    """Bin-center values for the given tokens; rejects the mask sentinel."""
    tokens = np.asarray(tokens)
    if tokens.size and (tokens.min() < 0 or tokens.max() > cb.size - 1):
        raise InvalidTokenError(
            f"tokens must lie in [0, {cb.size - 1}]; got range "
            f"[{tokens.min()}, {tokens.max()}]"
        )
    return cb.centers[tokens]


@dataclass
class TokenTrack:
    """Quantized pitch/energy/vad token sequences sharing one frame axis."""

    pitch: np.ndarray
    energy: np.ndarray
    vad: np.ndarray
    codebooks: dict[str, Codebook] = field(repr=False)

    def __post_init__(self):
        for name in FEATURES:
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            setattr(self, name, arr)
            cb = self.codebooks[name]
            if arr.size and (arr.min() < 0 or arr.max() > cb.mask_token):
                raise InvalidTokenError(f"{name} tokens out of range [0, {cb.mask_token}]")
        if not (len(self.pitch) == len(self.energy) == len(self.vad)):
            raise AlignmentError("token streams must share num_frames")

    @property
    def num_frames(self) -> int:
        return len(self.pitch)

    def stream(self, name: str) -> np.ndarray:
        return getattr(self, name)


def tokenize(track: ProsodyTrack, codebooks: dict[str, Codebook]) -> TokenTrack:
    """Quantize a prosody track's three contours with the given codebooks."""
    return TokenTrack(
        pitch=quantize(track.pitch, codebooks["pitch"]),
        energy=quantize(track.energy, codebooks["energy"]),
        vad=quantize(track.vad.astype(np.float64), codebooks["vad"]),
        codebooks=codebooks,
    )
