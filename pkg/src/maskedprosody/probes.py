"""Linear and Conformer probes over frozen representations.

Probes never backpropagate into the representation: they consume
precomputed feature arrays. The linear probe is an affine map with
softmax; weights start at zero so the fixed small-learning-rate regime
trains the decision direction rather than fighting a random init. The
Conformer probe stacks two blocks on projected frame sequences and pools
by task granularity (mean over frames for utterances, mean+max per span
for words, none for frame tasks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .errors import DegenerateLabelsError
from .model import ConformerBlock

GRANULARITIES = ("frame", "span", "utterance")


@dataclass
class ProbeSpec:
    kind: str  # "linear" | "conformer"
    granularity: str
    input_dim: int
    num_classes: int
    conformer_dim: int = 96
    conformer_layers: int = 2
    conformer_heads: int = 4
    conformer_kernel: int = 7
    conformer_ff: int = 192

    def __post_init__(self):
        if self.kind not in ("linear", "conformer"):
            raise ValueError(f"unknown probe kind {self.kind!r}")
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity {self.granularity!r}")
        if self.num_classes < 2:
            raise ValueError("need at least two classes")


@dataclass
class ProbeTrainConfig:
    steps: int = 1000
    batch_size: int = 32
    peak_lr: float = 4e-5
    warmup_steps: int = 100
    weight_decay: float = 0.01

    def lr_at(self, step: int) -> float:
        if step < self.warmup_steps:
            return self.peak_lr * (step + 1) / max(1, self.warmup_steps)
        return self.peak_lr * (self.steps - step) / max(1, self.steps - self.warmup_steps)


class LinearProbe(torch.nn.Module):
    def __init__(self, spec: ProbeSpec):
        super().__init__()
        self.spec = spec
        self.linear = torch.nn.Linear(spec.input_dim, spec.num_classes)
        torch.nn.init.zeros_(self.linear.weight)
        torch.nn.init.zeros_(self.linear.bias)

    def forward(self, x):
        return self.linear(x)


class ConformerProbe(torch.nn.Module):
    def __init__(self, spec: ProbeSpec):
        super().__init__()
        self.spec = spec
        dim = spec.conformer_dim
        self.proj = torch.nn.Linear(spec.input_dim, dim)
        self.blocks = torch.nn.ModuleList(
            ConformerBlock(dim, spec.conformer_heads, spec.conformer_ff, spec.conformer_kernel, 0.1)
            for _ in range(spec.conformer_layers)
        )
        head_dim = 2 * dim if spec.granularity == "span" else dim
        self.head = torch.nn.Linear(head_dim, spec.num_classes)
        torch.nn.init.zeros_(self.head.weight)
        torch.nn.init.zeros_(self.head.bias)

    def encode(self, frames, key_padding_mask=None):
        x = self.proj(frames)
        for block in self.blocks:
            x = block(x, key_padding_mask)
        return x


def _check_labels(labels):
    if len(np.unique(labels)) < 2:
        raise DegenerateLabelsError("training labels cover fewer than two classes")


def _train(model, sample_batch, cfg: ProbeTrainConfig, seed: int):
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=cfg.peak_lr, weight_decay=cfg.weight_decay
    )
    model.train()
    for step in range(cfg.steps):
        lr = cfg.lr_at(step)
        for group in optimizer.param_groups:
            group["lr"] = lr
        logits, targets = sample_batch(rng)
        loss = F.cross_entropy(logits, targets)
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
    model.eval()
    return model


def train_linear_probe(features, labels, spec, cfg, seed) -> LinearProbe:
    """features: (N, input_dim); labels: (N,) ints."""
    features = torch.as_tensor(np.asarray(features, dtype=np.float32))
    labels_arr = np.asarray(labels, dtype=np.int64)
    _check_labels(labels_arr)
    targets = torch.as_tensor(labels_arr)
    model = LinearProbe(spec)

    def sample_batch(rng):
        idx = rng.integers(0, len(features), size=cfg.batch_size)
        return model(features[idx]), targets[idx]

    return _train(model, sample_batch, cfg, seed)


def _pad_sequences(arrays):
    max_len = max(a.shape[0] for a in arrays)
    dim = arrays[0].shape[1]
    out = torch.zeros(len(arrays), max_len, dim)
    padding = torch.ones(len(arrays), max_len, dtype=torch.bool)
    for i, arr in enumerate(arrays):
        n = arr.shape[0]
        out[i, :n] = torch.as_tensor(arr, dtype=torch.float32)
        padding[i, :n] = False
    return out, padding


def train_conformer_probe(features, labels, spec, cfg, seed) -> ConformerProbe:
    """features: list of (T_i, input_dim) frame matrices.

    labels per granularity: utterance -> int per sequence; frame -> (T_i,)
    array per sequence; span -> (spans, span_labels) pair per sequence.
    """
    seqs = [np.asarray(f, dtype=np.float32) for f in features]
    torch.manual_seed(seed)  # init before _train reseeds identically
    model = ConformerProbe(spec)

    if spec.granularity == "utterance":
        labels_arr = np.asarray(labels, dtype=np.int64)
        _check_labels(labels_arr)

        def sample_batch(rng):
            idx = rng.integers(0, len(seqs), size=min(cfg.batch_size, len(seqs)))
            frames, padding = _pad_sequences([seqs[i] for i in idx])
            x = model.encode(frames, padding)
            mask = (~padding).unsqueeze(-1).float()
            pooled = (x * mask).sum(1) / mask.sum(1)
            return model.head(pooled), torch.as_tensor(labels_arr[idx])

    elif spec.granularity == "frame":
        _check_labels(np.concatenate([np.asarray(l) for l in labels]))
        frame_labels = [torch.as_tensor(np.asarray(l, dtype=np.int64)) for l in labels]

        def sample_batch(rng):
            idx = rng.integers(0, len(seqs), size=min(cfg.batch_size, len(seqs)))
            frames, padding = _pad_sequences([seqs[i] for i in idx])
            x = model.encode(frames, padding)
            logits = model.head(x)
            keep = ~padding
            return logits[keep], torch.cat([frame_labels[i] for i in idx])

    elif spec.granularity == "span":
        _check_labels(np.concatenate([np.asarray(l) for _, l in labels]))
        span_info = [(list(spans), torch.as_tensor(np.asarray(l, dtype=np.int64)))
                     for spans, l in labels]

        def sample_batch(rng):
            idx = rng.integers(0, len(seqs), size=min(cfg.batch_size, len(seqs)))
            frames, padding = _pad_sequences([seqs[i] for i in idx])
            x = model.encode(frames, padding)
            pooled, targets = [], []
            for row, i in enumerate(idx):
                spans, span_labels = span_info[i]
                for (s, e) in spans:
                    chunk = x[row, s:e]
                    pooled.append(torch.cat([chunk.mean(0), chunk.max(0).values]))
                targets.append(span_labels)
            return model.head(torch.stack(pooled)), torch.cat(targets)

    return _train(model, sample_batch, cfg, seed)


def train_probe(features, labels, spec: ProbeSpec, cfg: ProbeTrainConfig, seed: int):
    """Dispatch on probe kind; representations stay frozen throughout."""
    if spec.kind == "linear":
        return train_linear_probe(features, labels, spec, cfg, seed)
    return train_conformer_probe(features, labels, spec, cfg, seed)


def predict(probe, features):
    """(predicted labels, class probabilities) for linear-probe inputs."""
    with torch.no_grad():
        logits = probe(torch.as_tensor(np.asarray(features, dtype=np.float32)))
        probs = torch.softmax(logits, dim=-1).numpy()
    return probs.argmax(axis=-1), probs


def predict_sequences(probe: ConformerProbe, features, spans=None):
    """Conformer-probe inference mirroring the training-time pooling.

    Returns per-sequence outputs: utterance -> (N,) labels + (N, C)
    probabilities; frame -> list of per-frame label arrays + probability
    matrices; span -> flat span labels + probabilities in input order.
    """
    seqs = [np.asarray(f, dtype=np.float32) for f in features]
    spec = probe.spec
    labels_out, probs_out = [], []
    with torch.no_grad():
        for i, seq in enumerate(seqs):
            frames = torch.as_tensor(seq).unsqueeze(0)
            x = probe.encode(frames)
            if spec.granularity == "utterance":
                logits = probe.head(x.mean(1))
            elif spec.granularity == "frame":
                logits = probe.head(x.squeeze(0))
            else:
                pooled = [
                    torch.cat([x[0, s:e].mean(0), x[0, s:e].max(0).values])
                    for (s, e) in spans[i]
                ]
                logits = probe.head(torch.stack(pooled))
            probs = torch.softmax(logits, dim=-1).numpy()
            labels_out.append(probs.argmax(axis=-1))
            probs_out.append(probs)
    if spec.granularity == "utterance":
        return np.concatenate(labels_out), np.concatenate(probs_out)
    return labels_out, probs_out
