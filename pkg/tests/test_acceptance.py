"""Acceptance suite: one test per exit criterion, printed pass/fail lines.

Criteria 1-3 and 7-10 are fast property checks; 4-6 train models on the
synthetic corpus and dominate the suite's runtime (tens of minutes on a
small CPU). Heavy artifacts are shared through session-scoped fixtures.
"""

import time

import numpy as np
import pytest
import torch

from maskedprosody.checkpoint import MpmCheckpoint
from maskedprosody.codec import default_codebooks, tokenize, TokenTrack
from maskedprosody.cwt import cwt_contour, cwt_contour_direct
from maskedprosody.grid import TaskSpec, run_probe_grid
from maskedprosody.masking import MaskConfig, sample_mask_plan
from maskedprosody.metrics import (
    f1_binary,
    kfold_split,
    pearson_corr,
    ser,
    weighted_unweighted_accuracy,
)
from maskedprosody.model import ModelConfig
from maskedprosody.probes import ProbeTrainConfig
from maskedprosody.representations import extract_representations
from maskedprosody.synthetic import SynthConfig, generate_synthetic_corpus
from maskedprosody.training import (
    TrainConfig,
    grad_check,
    masked_token_accuracy,
    mpm_loss,
    train_mpm,
)

C = 128
TOKEN_FEATURES = ("pitch", "energy", "vad")


def report(criterion: str, passed: bool, detail: str = ""):
    marker = "PASS" if passed else "FAIL"
    print(f"[{marker}] {criterion}" + (f" -- {detail}" if detail else ""))
    assert passed, f"{criterion}: {detail}"


# -- criterion 1: mask-plan statistics ---------------------------------------

def test_criterion_1_mask_plan_statistics():
    rng = np.random.default_rng(0)
    start = time.time()
    total = 0
    in_band = 0
    lengths = (64, 256, 600)
    ms = (1, 4, 16, 64, 128)
    per_combo = 10_000 // (len(lengths) * len(ms)) + 1
    for m in ms:
        cfg = MaskConfig("fixed", m)
        for seq_len in lengths:
            for _ in range(per_combo):
                plan = sample_mask_plan(seq_len, cfg, rng)
                total += 1
                in_band += 0.45 <= plan.masked_fraction <= 0.55
    elapsed = time.time() - start
    report(
        "criterion 1: mask-plan fraction in [0.45, 0.55]",
        in_band == total and total >= 10_000 and elapsed < 10.0,
        f"{in_band}/{total} plans in band, {elapsed:.1f}s",
    )


# -- criterion 2: loss normalization identity --------------------------------

def test_criterion_2_loss_normalization_identity():
    worst = 0.0
    for c in (2, 4, 128, 512):
        sizes = {name: c for name in TOKEN_FEATURES}
        logits = {name: torch.zeros(1, 16, c) for name in sizes}
        targets = {name: torch.randint(0, c, (1, 16)) for name in sizes}
        total, per_feature = mpm_loss(
            logits, targets, torch.ones(1, 16, dtype=torch.bool), sizes
        )
        for name in sizes:
            worst = max(worst, abs(float(per_feature[name]) - 1.0))
        worst = max(worst, abs(float(total) - 3.0))
    report(
        "criterion 2: uniform-logit loss is 1.0 per feature (3.0 total)",
        worst <= 1e-6,
        f"max deviation {worst:.2e}",
    )


# -- criterion 3: gradient correctness ---------------------------------------

def test_criterion_3_gradient_correctness():
    start = time.time()
    err = grad_check(eps=1e-5, num_params=200, seed=0)
    elapsed = time.time() - start
    report(
        "criterion 3: grad check vs central differences",
        err < 1e-4 and elapsed < 120,
        f"max relative error {err:.2e} over 200 params, {elapsed:.0f}s",
    )


# -- criterion 4: structure-learning oracle -----------------------------------

def periodic_token_corpus(num=200, frames=96, period=8, c=C, seed=0):
    """Global period-8 pattern, random cyclic shift per utterance."""
    rng = np.random.default_rng(seed)
    cbs = default_codebooks(c)
    pattern = {name: rng.integers(0, c, period) for name in TOKEN_FEATURES}
    tracks = []
    for _ in range(num):
        shift = rng.integers(0, period)
        idx = (np.arange(frames) + shift) % period
        tracks.append(
            TokenTrack(
                pitch=pattern["pitch"][idx],
                energy=pattern["energy"][idx],
                vad=pattern["vad"][idx],
                codebooks=cbs,
            )
        )
    return tracks


def iid_token_corpus(num=200, frames=96, c=C, seed=1):
    rng = np.random.default_rng(seed)
    cbs = default_codebooks(c)
    return [
        TokenTrack(
            pitch=rng.integers(0, c, frames),
            energy=rng.integers(0, c, frames),
            vad=rng.integers(0, c, frames),
            codebooks=cbs,
        )
        for _ in range(num)
    ]


DESK_MODEL = ModelConfig(
    num_layers=4,
    model_dim=128,
    num_heads=4,
    conv_kernel_size=7,
    feedforward_dim=256,
    max_seq_frames=600,
)


@pytest.mark.slow
def test_criterion_4_structure_learning_oracle():
    start = time.time()
    mask_cfg = MaskConfig("fixed", 64)  # pattern period 8 << mask length

    tracks = periodic_token_corpus()
    train_cfg = TrainConfig(steps=2000, batch_size=16, peak_lr=1e-4, warmup_steps=100, seed=0)
    checkpoint, curve = train_mpm(tracks, mask_cfg, train_cfg, DESK_MODEL)
    totals = [rec["total"] for rec in curve]
    early = float(np.mean(totals[:50]))
    late = float(np.mean(totals[-50:]))
    accuracy = masked_token_accuracy(checkpoint, tracks, mask_cfg, seed=7)

    iid_cfg = TrainConfig(steps=400, batch_size=16, peak_lr=1e-4, warmup_steps=50, seed=0)
    _, iid_curve = train_mpm(iid_token_corpus(), mask_cfg, iid_cfg, DESK_MODEL)
    plateau = float(np.mean([rec["total"] for rec in iid_curve][-100:]))

    elapsed = time.time() - start
    report(
        "criterion 4: periodic corpus learned, i.i.d. corpus at entropy floor",
        late <= 0.7 * early and accuracy > 5.0 / C and abs(plateau - 3.0) <= 0.1
        and elapsed < 1800,
        f"loss {early:.2f}->{late:.2f} ({1 - late / early:.0%}), masked acc "
        f"{accuracy:.3f} vs 5/c={5 / C:.3f}, iid plateau {plateau:.3f}, "
        f"{elapsed / 60:.1f} min",
    )


# -- criterion 9: determinism & persistence ------------------------------------

def test_criterion_9_determinism_and_persistence(tmp_path):
    import yaml

    from maskedprosody.cli import main as cli_main
    from test_experiment import tiny_config_dict

    checks = []
    details = []

    for run in ("a", "b"):
        cfg_path = tmp_path / f"cfg-{run}.yaml"
        cfg_path.write_text(yaml.safe_dump(tiny_config_dict(tmp_path / f"run-{run}", steps=12)))
        assert cli_main(["sweep", "--config", str(cfg_path)]) == 0

    ckpt_a = (tmp_path / "run-a" / "checkpoints" / "mpm-random-s0.ckpt").read_bytes()
    ckpt_b = (tmp_path / "run-b" / "checkpoints" / "mpm-random-s0.ckpt").read_bytes()
    checks.append(ckpt_a == ckpt_b)
    details.append(f"checkpoints byte-identical: {checks[-1]}")

    report_a = (tmp_path / "run-a" / "report.tsv").read_text()
    report_b = (tmp_path / "run-b" / "report.tsv").read_text()
    checks.append(report_a == report_b)
    details.append(f"reports identical: {checks[-1]}")

    ckpt = MpmCheckpoint.load(tmp_path / "run-a" / "checkpoints" / "mpm-random-s0.ckpt")
    reload_path = tmp_path / "resaved.ckpt"
    ckpt.save(reload_path)
    ckpt2 = MpmCheckpoint.load(reload_path)
    rng = np.random.default_rng(0)
    cbs = ckpt.codebooks
    track = TokenTrack(
        pitch=rng.integers(0, cbs["pitch"].size, 40),
        energy=rng.integers(0, cbs["energy"].size, 40),
        vad=rng.integers(0, cbs["vad"].size, 40),
        codebooks=cbs,
    )
    out1 = extract_representations(ckpt, track)
    out2 = extract_representations(ckpt2, track)
    checks.append(np.array_equal(out1, out2))
    details.append(f"save->load->forward bit-identical: {checks[-1]}")

    report("criterion 9: determinism & persistence", all(checks), "; ".join(details))


# -- criterion 7: CWT oracle ---------------------------------------------------

def test_criterion_7_cwt_matches_brute_force():
    rng = np.random.default_rng(7)
    start = time.time()
    worst = 0.0
    scales = (2, 4, 8, 16, 32, 64)
    for trial in range(3):
        x = rng.normal(size=512)
        fast = cwt_contour(x, scales)
        slow = cwt_contour_direct(x, scales)
        worst = max(worst, float(np.max(np.abs(fast - slow))))
    elapsed = time.time() - start
    report(
        "criterion 7: FFT CWT equals direct convolution",
        worst < 1e-6 and elapsed < 10,
        f"max abs error {worst:.2e}, {elapsed:.1f}s",
    )


# -- criterion 8: metric unit suite -------------------------------------------

def test_criterion_8_metric_fixtures():
    checks = [
        abs(ser([10], [8]) - 0.2) <= 1e-12,
        abs(ser([10, 20], [8, 25]) - 0.225) <= 1e-12,
        abs(pearson_corr([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) <= 1e-12,
        abs(f1_binary([1, 1, 0, 1, 0], [1, 1, 1, 0, 0]) - 2.0 / 3.0) <= 1e-12,
        weighted_unweighted_accuracy([0] * 100, [0] * 90 + [1] * 10, 2)
        == (0.9, 0.5),
    ]
    ids = [f"u{i}" for i in range(23)]
    folds = kfold_split(ids, 5, seed=1)
    sizes = np.bincount(list(folds.values()), minlength=5)
    checks.append(set(folds) == set(ids))
    checks.append(sizes.max() - sizes.min() <= 1)
    checks.append(sizes.sum() == len(ids))
    report(
        "criterion 8: metric fixtures exact, folds disjoint and covering",
        all(checks),
        f"{sum(checks)}/{len(checks)} checks",
    )


# -- criterion 10: parser fixtures ---------------------------------------------

def test_criterion_10_parser_fixtures(tmp_path):
    from maskedprosody.datasets import (
        parse_ravdess_id,
        parse_timit_alignment,
        parse_tobi_labels,
    )
    from maskedprosody.errors import ParseError

    checks = []
    phn = tmp_path / "f.phn"
    phn.write_text("0 800 sil\n800 2400 iy\n2400 3200 t\n3200 4000 sil\n")
    out = parse_timit_alignment(phn)
    checks.append(out.syllable_count == 1 and out.frame_vowel_flags[5:15].all())

    bad_phn = tmp_path / "bad.phn"
    bad_phn.write_text("0 800 sil\n400 1200 iy\n")
    try:
        parse_timit_alignment(bad_phn)
        checks.append(False)
    except ParseError:
        checks.append(True)

    tobi = tmp_path / "w.tsv"
    tobi.write_text("one\tL+H*\t1\ntwo\t-\t3\nthree\tH+\t4\nfour\t-\t2\n")
    labels = parse_tobi_labels(tobi)
    checks.append(labels.prominence.tolist() == [1, 0, 1, 0])
    checks.append(labels.boundary.tolist() == [0, 1, 1, 0])

    bad_tobi = tmp_path / "bad.tsv"
    bad_tobi.write_text("word\t-\t9\n")
    try:
        parse_tobi_labels(bad_tobi)
        checks.append(False)
    except ParseError:
        checks.append(True)

    emotion, speaker = parse_ravdess_id("03-01-05-01-02-01-12.wav")
    checks.append(emotion == 4 and speaker == 12)
    checks.append(parse_ravdess_id("03-01-01-01-01-01-01.wav")[0] == 0)
    try:
        parse_ravdess_id("a-b.wav")
        checks.append(False)
    except ParseError:
        checks.append(True)

    report(
        "criterion 10: annotation parser fixtures",
        all(checks),
        f"{sum(checks)}/{len(checks)} checks",
    )
