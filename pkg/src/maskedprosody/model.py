"""Conformer reconstruction model over the three token streams.

One trunk consumes the sum of three feature embeddings plus a sinusoidal
positional code; three linear heads emit per-feature logits. Blocks are
pre-norm with the half-step feedforward pair and a depthwise convolution
module. LayerNorm is used inside the convolution module (instead of a
batch statistic) so outputs never depend on batch composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from .codec import FEATURES


def _default_codebook_sizes() -> dict[str, int]:
    return {"pitch": 128, "energy": 128, "vad": 128}


@dataclass
class ModelConfig:
    num_layers: int = 4
    model_dim: int = 128
    num_heads: int = 4
    conv_kernel_size: int = 7
    feedforward_dim: int = 256
    codebook_sizes: dict[str, int] = field(default_factory=_default_codebook_sizes)
    max_seq_frames: int = 600
    extraction_layer: int | None = None  # defaults to ceil(2L/3)
    dropout: float = 0.1

    def __post_init__(self):
        if self.model_dim % self.num_heads != 0:
            raise ValueError("model_dim must be divisible by num_heads")
        if self.num_layers < 0:
            raise ValueError("num_layers must be non-negative")
        if self.extraction_layer is None:
            self.extraction_layer = max(1, math.ceil(2 * self.num_layers / 3))
        if self.num_layers >= 1 and not 1 <= self.extraction_layer <= self.num_layers:
            raise ValueError(
                f"extraction_layer {self.extraction_layer} outside [1, {self.num_layers}]"
            )
        if set(self.codebook_sizes) != set(FEATURES):
            raise ValueError(f"codebook_sizes must have keys {FEATURES}")


def sinusoidal_encoding(length: int, dim: int) -> torch.Tensor:
    position = torch.arange(length, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float32) * (-math.log(10000.0) / dim))
    enc = torch.zeros(length, dim)
    enc[:, 0::2] = torch.sin(position * div)
    enc[:, 1::2] = torch.cos(position * div[: dim // 2])
    return enc


class FeedForwardModule(nn.Module):
    def __init__(self, dim: int, hidden: int, dropout: float):
        super().__init__()
        self.norm = nn.LayerNorm(dim)
        self.net = nn.Sequential(
            nn.Linear(dim, hidden),
            nn.SiLU(),
            nn.Dropout(dropout),
            nn.Linear(hidden, dim),
            nn.Dropout(dropout),
        )

    def forward(self, x):
        return self.net(self.norm(x))


class SelfAttentionModule(nn.Module):
    def __init__(self, dim: int, num_heads: int, dropout: float):
        super().__init__()
        self.norm = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, num_heads, dropout=dropout, batch_first=True)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x, key_padding_mask=None):
        y = self.norm(x)
        y, _ = self.attn(y, y, y, key_padding_mask=key_padding_mask, need_weights=False)
        return self.dropout(y)


class ConvolutionModule(nn.Module):
    def __init__(self, dim: int, kernel_size: int, dropout: float):
        super().__init__()
        self.norm = nn.LayerNorm(dim)
        self.pointwise_in = nn.Conv1d(dim, 2 * dim, 1)
        self.depthwise = nn.Conv1d(dim, dim, kernel_size, padding="same", groups=dim)
        self.channel_norm = nn.LayerNorm(dim)
        self.pointwise_out = nn.Conv1d(dim, dim, 1)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x, key_padding_mask=None):
        y = self.norm(x)
        if key_padding_mask is not None:
            # zero padded frames so the kernel sees them as absent
            y = y.masked_fill(key_padding_mask.unsqueeze(-1), 0.0)
        y = y.transpose(1, 2)
        y = F.glu(self.pointwise_in(y), dim=1)
        if key_padding_mask is not None:
            y = y.masked_fill(key_padding_mask.unsqueeze(1), 0.0)
        y = self.depthwise(y)
        y = self.channel_norm(y.transpose(1, 2)).transpose(1, 2)
        y = self.pointwise_out(F.silu(y))
        return self.dropout(y.transpose(1, 2))


class ConformerBlock(nn.Module):
    def __init__(self, dim: int, num_heads: int, ff_hidden: int, kernel_size: int, dropout: float):
        super().__init__()
        self.ff1 = FeedForwardModule(dim, ff_hidden, dropout)
        self.attention = SelfAttentionModule(dim, num_heads, dropout)
        self.conv = ConvolutionModule(dim, kernel_size, dropout)
        self.ff2 = FeedForwardModule(dim, ff_hidden, dropout)
        self.final_norm = nn.LayerNorm(dim)

    def forward(self, x, key_padding_mask=None):
        x = x + 0.5 * self.ff1(x)
        x = x + self.attention(x, key_padding_mask)
        x = x + self.conv(x, key_padding_mask)
        x = x + 0.5 * self.ff2(x)
        return self.final_norm(x)


class MaskedProsodyModel(nn.Module):
    """Embeds the three token streams, runs the trunk, emits per-feature logits.

    Each embedding table has ``c + 1`` rows; row ``c`` is the learned mask
    token for that feature.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.embeddings = nn.ModuleDict(
            {
                name: nn.Embedding(cfg.codebook_sizes[name] + 1, cfg.model_dim)
                for name in FEATURES
            }
        )
        self.register_buffer(
            "positional", sinusoidal_encoding(cfg.max_seq_frames, cfg.model_dim)
        )
        self.input_dropout = nn.Dropout(cfg.dropout)
        self.blocks = nn.ModuleList(
            ConformerBlock(
                cfg.model_dim,
                cfg.num_heads,
                cfg.feedforward_dim,
                cfg.conv_kernel_size,
                cfg.dropout,
            )
            for _ in range(cfg.num_layers)
        )
        self.heads = nn.ModuleDict(
            {
                name: nn.Linear(cfg.model_dim, cfg.codebook_sizes[name])
                for name in FEATURES
            }
        )

    def forward(self, tokens: dict[str, torch.Tensor], key_padding_mask=None):
        """tokens: per-feature (batch, frames) long tensors sharing one shape.

        Returns (logits, hidden_states); logits maps each feature to a
        (batch, frames, c) tensor, hidden_states[i] is the trunk state after
        block i (index 0 is the embedding sum + positional code).
        """
        shapes = {tokens[name].shape for name in FEATURES}
        if len(shapes) != 1:
            raise ValueError("token streams must share a (batch, frames) shape")
        _, num_frames = tokens["pitch"].shape
        if num_frames > self.cfg.max_seq_frames:
            raise ValueError(
                f"sequence of {num_frames} frames exceeds max_seq_frames="
                f"{self.cfg.max_seq_frames}; truncate before calling forward"
            )

        x = sum(self.embeddings[name](tokens[name]) for name in FEATURES)
        x = x + self.positional[:num_frames].to(x.dtype)
        x = self.input_dropout(x)
        hidden = [x]
        for block in self.blocks:
            x = block(x, key_padding_mask)
            hidden.append(x)
        logits = {name: self.heads[name](x) for name in FEATURES}
        return logits, hidden

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())
