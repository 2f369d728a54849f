"""Frozen-model feature extraction and span aggregation."""

from __future__ import annotations

import numpy as np
import torch

from .checkpoint import MpmCheckpoint
from .codec import FEATURES, TokenTrack
from .errors import InvalidSpanError

_MODEL_CACHE: dict[int, object] = {}


def _cached_model(checkpoint: MpmCheckpoint):
    model = _MODEL_CACHE.get(id(checkpoint))
    if model is None:
        model = checkpoint.build_model()
        _MODEL_CACHE[id(checkpoint)] = model
    return model


def extract_representations(
    checkpoint: MpmCheckpoint, track: TokenTrack, layer: int | None = None
) -> np.ndarray:
    """Hidden state of one trunk layer on clean (unmasked) input.

    ``layer`` is 1-based (1..num_layers); defaults to the configured
    extraction layer. Returns (num_frames, model_dim) float32.
    """
    cfg = checkpoint.config
    if layer is None:
        layer = cfg.extraction_layer
    if not 1 <= layer <= cfg.num_layers:
        raise ValueError(f"layer {layer} outside [1, {cfg.num_layers}]")
    model = _cached_model(checkpoint)
    tokens = {
        name: torch.from_numpy(track.stream(name)).unsqueeze(0) for name in FEATURES
    }
    with torch.no_grad():
        _, hidden = model(tokens)
    return hidden[layer].squeeze(0).numpy().astype(np.float32)


def aggregate_spans(frames: np.ndarray, spans) -> np.ndarray:
    """Per-span concat(mean, max) over the frame axis -> (len(spans), 2*dim)."""
    frames = np.asarray(frames)
    num_frames = frames.shape[0]
    out = np.empty((len(spans), 2 * frames.shape[1]), dtype=frames.dtype)
    for i, (start, end) in enumerate(spans):
        if not 0 <= start < end <= num_frames:
            raise InvalidSpanError(f"span ({start}, {end}) invalid for {num_frames} frames")
        chunk = frames[start:end]
        out[i] = np.concatenate([chunk.mean(axis=0), chunk.max(axis=0)])
    return out
