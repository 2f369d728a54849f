"""Reconstruction loss, gradient verification, and the training loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
import torch
import torch.nn.functional as F

from .codec import FEATURES, TokenTrack
from .errors import (
    AlignmentError,
    DivergenceError,
    GradientDiagnosticsError,
    UndefinedLossError,
)
from .masking import MaskConfig, sample_mask_plan
from .model import MaskedProsodyModel, ModelConfig

DIVERGENCE_FACTOR = 10.0
DIVERGENCE_PATIENCE = 100


@dataclass
class TrainConfig:
    steps: int = 2000
    batch_size: int = 32
    peak_lr: float = 1e-4
    warmup_steps: int = 100
    weight_decay: float = 0.01
    grad_clip: float = 1.0
    seed: int = 0
    log_every: int = 1
    deterministic: bool = True

    def __post_init__(self):
        if not 0 <= self.warmup_steps < self.steps:
            raise ValueError("warmup_steps must be below steps")


def linear_schedule(step: int, cfg: TrainConfig) -> float:
    """Linear warmup to peak_lr, then linear decay to zero."""
    if step < cfg.warmup_steps:
        return cfg.peak_lr * (step + 1) / max(1, cfg.warmup_steps)
    return cfg.peak_lr * (cfg.steps - step) / max(1, cfg.steps - cfg.warmup_steps)


def mpm_loss(
    logits: dict[str, torch.Tensor],
    targets: dict[str, torch.Tensor],
    mask_indicator: torch.Tensor,
    codebook_sizes: dict[str, int],
):
    """Per-feature cross-entropy over masked positions, each scaled by 1/ln(c).

    Returns (total, per_feature) where total is the sum of the three
    normalized feature losses. Natural log throughout, so uniform logits
    give exactly 1.0 per feature.
    """
    mask = mask_indicator.bool()
    if int(mask.sum()) == 0:
        raise UndefinedLossError("no masked positions to compute the loss over")
    per_feature = {}
    for name in FEATURES:
        feat_logits, feat_targets = logits[name], targets[name]
        if feat_logits.shape[:-1] != feat_targets.shape or feat_targets.shape != mask.shape:
            raise AlignmentError(f"{name}: logits/targets/mask shapes disagree")
        ce = F.cross_entropy(feat_logits[mask], feat_targets[mask])
        per_feature[name] = ce / math.log(codebook_sizes[name])
    total = sum(per_feature.values())
    return total, per_feature


def collect_gradients(model: torch.nn.Module) -> dict[str, torch.Tensor]:
    """Clone every parameter gradient, raising if any is non-finite."""
    grads = {}
    for name, param in model.named_parameters():
        if param.grad is None:
            continue
        if not torch.isfinite(param.grad).all():
            raise GradientDiagnosticsError(f"non-finite gradient in parameter {name!r}")
        grads[name] = param.grad.detach().clone()
    return grads


def backward(model: torch.nn.Module, loss: torch.Tensor) -> dict[str, torch.Tensor]:
    """Backpropagate and return per-parameter gradients."""
    model.zero_grad(set_to_none=True)
    loss.backward()
    return collect_gradients(model)


def _random_batch(cfg: ModelConfig, batch: int, frames: int, mask_frac: float, rng):
    tokens, targets = {}, {}
    for name in FEATURES:
        c = cfg.codebook_sizes[name]
        full = torch.from_numpy(rng.integers(0, c, size=(batch, frames)))
        targets[name] = full
    indicator = torch.from_numpy(rng.random((batch, frames)) < mask_frac)
    indicator[:, 0] = True  # guarantee at least one masked position
    for name in FEATURES:
        corrupted = targets[name].clone()
        corrupted[indicator] = cfg.codebook_sizes[name]
        tokens[name] = corrupted
    return tokens, targets, indicator


def grad_check(
    cfg: ModelConfig | None = None,
    eps: float = 1e-5,
    num_params: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between autograd and central finite differences.

    Runs a tiny double-precision model on a random masked batch and
    perturbs >= num_params randomly chosen parameter coordinates.
    """
    cfg = cfg or ModelConfig(
        num_layers=2,
        model_dim=12,
        num_heads=2,
        conv_kernel_size=3,
        feedforward_dim=16,
        codebook_sizes={"pitch": 5, "energy": 5, "vad": 4},
        max_seq_frames=12,
        dropout=0.0,
    )
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    model = MaskedProsodyModel(cfg).double().eval()
    tokens, targets, indicator = _random_batch(cfg, batch=2, frames=10, mask_frac=0.5, rng=rng)

    def compute_loss():
        logits, _ = model(tokens)
        total, _ = mpm_loss(logits, targets, indicator, cfg.codebook_sizes)
        return total

    analytic = backward(model, compute_loss())

    names = [n for n, p in model.named_parameters()]
    params = dict(model.named_parameters())
    coords = []
    while len(coords) < num_params:
        name = names[rng.integers(0, len(names))]
        flat_idx = int(rng.integers(0, params[name].numel()))
        coords.append((name, flat_idx))

    max_rel = 0.0
    with torch.no_grad():
        for name, idx in coords:
            flat = params[name].view(-1)
            original = flat[idx].item()
            flat[idx] = original + eps
            high = compute_loss().item()
            flat[idx] = original - eps
            low = compute_loss().item()
            flat[idx] = original
            numeric = (high - low) / (2 * eps)
            exact = analytic[name].view(-1)[idx].item()
            rel = abs(exact - numeric) / max(abs(exact), abs(numeric), 1e-2)
            max_rel = max(max_rel, rel)
    return max_rel


def _pad_batch(batch_tracks, mask_cfg, cfg, rng):
    """Corrupt and right-pad a list of token tracks to a common length."""
    m = mask_cfg.resolve_m(rng)
    fixed = MaskConfig("fixed", m)
    max_len = max(t.num_frames for t in batch_tracks)
    size = len(batch_tracks)
    tokens = {name: torch.zeros(size, max_len, dtype=torch.long) for name in FEATURES}
    targets = {name: torch.zeros(size, max_len, dtype=torch.long) for name in FEATURES}
    indicator = torch.zeros(size, max_len, dtype=torch.bool)
    padding = torch.ones(size, max_len, dtype=torch.bool)
    for i, track in enumerate(batch_tracks):
        n = track.num_frames
        plan = sample_mask_plan(n, fixed, rng)
        ind = torch.from_numpy(plan.indicator())
        for name in FEATURES:
            target = torch.from_numpy(track.stream(name))
            corrupted = target.clone()
            corrupted[ind] = track.codebooks[name].mask_token
            tokens[name][i, :n] = corrupted
            targets[name][i, :n] = target
        indicator[i, :n] = ind
        padding[i, :n] = False
    return tokens, targets, indicator, padding, m


def train_mpm(
    tracks: list[TokenTrack],
    mask_cfg: MaskConfig,
    train_cfg: TrainConfig,
    model_cfg: ModelConfig,
):
    """Train the reconstruction model on quantized tracks.

    Returns (checkpoint, loss_curve); the curve holds one record per
    log_every steps with the total and per-feature normalized losses.
    Raises DivergenceError if the loss exceeds 10x its initial value for
    100 consecutive steps.
    """
    from .checkpoint import MpmCheckpoint  # local import to avoid a cycle

    if not tracks:
        raise ValueError("training corpus is empty")
    sizes = {name: tracks[0].codebooks[name].size for name in FEATURES}
    if sizes != model_cfg.codebook_sizes:
        raise ValueError(
            f"track codebook sizes {sizes} do not match model {model_cfg.codebook_sizes}"
        )
    tracks = [_truncate(t, model_cfg.max_seq_frames) for t in tracks]

    if train_cfg.deterministic:
        torch.use_deterministic_algorithms(True)
    torch.manual_seed(train_cfg.seed)
    rng = np.random.default_rng(train_cfg.seed)
    model = MaskedProsodyModel(model_cfg)
    model.train()
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=train_cfg.peak_lr, weight_decay=train_cfg.weight_decay
    )

    curve = []
    mask_lengths = []
    initial_loss = None
    bad_steps = 0
    for step in range(train_cfg.steps):
        lr = linear_schedule(step, train_cfg)
        for group in optimizer.param_groups:
            group["lr"] = lr

        idx = rng.integers(0, len(tracks), size=train_cfg.batch_size)
        batch = [tracks[i] for i in idx]
        tokens, targets, indicator, padding, m = _pad_batch(batch, mask_cfg, model_cfg, rng)
        mask_lengths.append(m)

        logits, _ = model(tokens, key_padding_mask=padding)
        total, per_feature = mpm_loss(logits, targets, indicator, model_cfg.codebook_sizes)

        model.zero_grad(set_to_none=True)
        total.backward()
        collect_gradients(model)
        if train_cfg.grad_clip:
            torch.nn.utils.clip_grad_norm_(model.parameters(), train_cfg.grad_clip)
        optimizer.step()

        loss_value = float(total.detach())
        if initial_loss is None:
            initial_loss = loss_value
        if loss_value > DIVERGENCE_FACTOR * initial_loss:
            bad_steps += 1
            if bad_steps >= DIVERGENCE_PATIENCE:
                raise DivergenceError(
                    f"loss {loss_value:.3f} stayed above {DIVERGENCE_FACTOR}x initial "
                    f"({initial_loss:.3f}) for {bad_steps} steps"
                )
        else:
            bad_steps = 0

        if step % train_cfg.log_every == 0 or step == train_cfg.steps - 1:
            curve.append(
                {
                    "step": step,
                    "total": loss_value,
                    **{name: float(per_feature[name].detach()) for name in FEATURES},
                }
            )

    model.eval()
    # no wall-clock here: checkpoints must be byte-identical across reruns
    metadata = {
        "steps_completed": train_cfg.steps,
        "final_loss": curve[-1]["total"] if curve else None,
        "seed": train_cfg.seed,
        "mask_strategy": mask_cfg.label,
        "mask_lengths_seen": sorted(set(mask_lengths)),
        "train_config": asdict(train_cfg),
        "scale": "desk",
    }
    checkpoint = MpmCheckpoint.from_model(model, model_cfg, tracks[0].codebooks, metadata)
    return checkpoint, curve


def _truncate(track: TokenTrack, max_frames: int) -> TokenTrack:
    if track.num_frames <= max_frames:
        return track
    return TokenTrack(
        pitch=track.pitch[:max_frames],
        energy=track.energy[:max_frames],
        vad=track.vad[:max_frames],
        codebooks=track.codebooks,
    )


def masked_token_accuracy(checkpoint, tracks, mask_cfg: MaskConfig, seed: int = 0,
                          max_tracks: int = 64) -> float:
    """Argmax reconstruction accuracy over freshly masked positions.

    Pooled over the three feature streams; chance level is 1/c for
    uniform targets.
    """
    from .masking import apply_mask

    model = checkpoint.build_model()
    rng = np.random.default_rng(seed)
    correct = 0
    total = 0
    with torch.no_grad():
        for track in tracks[:max_tracks]:
            plan = sample_mask_plan(track.num_frames, mask_cfg, rng)
            corrupted, target, indicator = apply_mask(track, plan)
            tokens = {
                name: torch.from_numpy(corrupted.stream(name)).unsqueeze(0)
                for name in FEATURES
            }
            logits, _ = model(tokens)
            mask = torch.from_numpy(indicator)
            for name in FEATURES:
                preds = logits[name].squeeze(0).argmax(-1)[mask]
                golds = torch.from_numpy(target.stream(name))[mask]
                correct += int((preds == golds).sum())
                total += int(mask.sum())
    return correct / total
