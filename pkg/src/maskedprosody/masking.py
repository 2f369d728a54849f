"""Aligned span corruption for the three token streams.

Spans of a configured length are dropped onto the frame axis until half
the sequence is masked; the same plan is applied to pitch, energy and
voice activity so the model can never read a masked frame through a
sibling stream. Every emitted plan masks between 45% and 55% of frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .codec import FEATURES, TokenTrack
from .errors import AlignmentError

RANDOM_M_RANGE = (1, 128)


@dataclass(frozen=True)
class MaskConfig:
    strategy: str = "fixed"  # "fixed" | "random"
    m: int = 16

    def __post_init__(self):
        if self.strategy not in ("fixed", "random"):
            raise ValueError(f"unknown masking strategy {self.strategy!r}")
        if self.m < 1:
            raise ValueError("mask length m must be >= 1")

    @classmethod
    def parse(cls, name) -> "MaskConfig":
        """'random' or a fixed mask length like 16 / '16'."""
        if isinstance(name, MaskConfig):
            return name
        if isinstance(name, str) and name.lower() == "random":
            return cls(strategy="random")
        return cls(strategy="fixed", m=int(name))

    @property
    def label(self) -> str:
        return "random" if self.strategy == "random" else str(self.m)

    def resolve_m(self, rng: np.random.Generator) -> int:
        """Effective mask length this batch; random strategy resamples per call."""
        if self.strategy == "random":
            return int(rng.integers(RANDOM_M_RANGE[0], RANDOM_M_RANGE[1] + 1))
        return self.m


@dataclass(frozen=True)
class MaskPlan:
    spans: tuple[tuple[int, int], ...]  # (start_frame, length), disjoint, sorted
    seq_len: int

    @property
    def masked_fraction(self) -> float:
        return sum(length for _, length in self.spans) / self.seq_len

    def indicator(self) -> np.ndarray:
        out = np.zeros(self.seq_len, dtype=bool)
        for start, length in self.spans:
            out[start : start + length] = True
        return out


def _spans_from_indicator(covered: np.ndarray) -> tuple[tuple[int, int], ...]:
    edges = np.flatnonzero(np.diff(np.concatenate([[0], covered.view(np.int8), [0]])))
    return tuple(
        (int(start), int(end - start)) for start, end in zip(edges[::2], edges[1::2])
    )


def sample_mask_plan(seq_len: int, cfg: MaskConfig, rng: np.random.Generator) -> MaskPlan:
    """Drop spans of length m at uniform starts until half the frames are masked.

    Spans merge where they overlap. A span that would push coverage past
    the 55% ceiling is trimmed to fit, and an m longer than half the
    sequence is clamped to ceil(seq_len / 2), so the masked fraction of
    every plan lands in [0.45, 0.55].
    """
    if seq_len < 8:
        raise ValueError("seq_len must be at least 8")
    target = math.ceil(0.5 * seq_len)
    ceiling = math.floor(0.55 * seq_len)
    if target > ceiling:  # only possible at seq_len == 9
        target = ceiling = round(0.5 * seq_len)
    m_eff = min(cfg.resolve_m(rng), math.ceil(0.5 * seq_len))

    covered = np.zeros(seq_len, dtype=bool)
    masked = 0
    while masked < target:
        # capping the span by remaining headroom keeps coverage <= ceiling
        length = min(m_eff, ceiling - masked)
        start = int(rng.integers(0, seq_len - length + 1))
        gain = int(length - covered[start : start + length].sum())
        covered[start : start + length] = True
        masked += gain
    return MaskPlan(spans=_spans_from_indicator(covered), seq_len=seq_len)


def apply_mask(tt: TokenTrack, plan: MaskPlan):
    """Corrupt all three streams with one plan.

    Returns (corrupted TokenTrack, target TokenTrack, boolean indicator).
    Masked positions carry each feature's reserved mask token (index c).
    """
    if plan.seq_len != tt.num_frames:
        raise AlignmentError(
            f"plan covers {plan.seq_len} frames but track has {tt.num_frames}"
        )
    indicator = plan.indicator()
    corrupted = {}
    for name in FEATURES:
        stream = tt.stream(name).copy()
        stream[indicator] = tt.codebooks[name].mask_token
        corrupted[name] = stream
    return (
        TokenTrack(codebooks=tt.codebooks, **corrupted),
        tt,
        indicator,
    )
