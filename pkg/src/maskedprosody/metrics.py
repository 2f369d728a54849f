"""Task metrics and cross-validation splitting."""

from __future__ import annotations

import warnings

import numpy as np

from .errors import UndefinedMetricError


def ser(actual_counts, predicted_counts) -> float:
    """Mean over utterances of |actual - predicted| / actual.

    Utterances with an actual count of zero are excluded with a warning.
    """
    actual = np.asarray(actual_counts, dtype=np.float64)
    predicted = np.asarray(predicted_counts, dtype=np.float64)
    if actual.shape != predicted.shape:
        raise ValueError("count vectors must have equal length")
    keep = actual > 0
    if not keep.all():
        warnings.warn(f"excluding {int((~keep).sum())} utterances with zero actual count")
    if not keep.any():
        raise UndefinedMetricError("no utterances with a positive actual count")
    return float(np.mean(np.abs(actual[keep] - predicted[keep]) / actual[keep]))


def pearson_corr(a, b) -> float:
    """Product-moment correlation coefficient."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("inputs must be equal-length vectors of size >= 2")
    da, db = a - a.mean(), b - b.mean()
    denom = np.sqrt((da**2).sum() * (db**2).sum())
    if denom == 0:
        raise UndefinedMetricError("correlation undefined for zero-variance input")
    return float(np.clip((da * db).sum() / denom, -1.0, 1.0))


def f1_binary(preds, golds) -> float:
    """F1 on the positive class; 0 (with a warning) when both sides are all-negative."""
    preds = np.asarray(preds).astype(bool)
    golds = np.asarray(golds).astype(bool)
    if preds.shape != golds.shape:
        raise ValueError("prediction/gold vectors must have equal length")
    tp = int((preds & golds).sum())
    fp = int((preds & ~golds).sum())
    fn = int((~preds & golds).sum())
    if tp == 0:
        if fp == 0 and fn == 0:
            warnings.warn("no positive labels or predictions; F1 defined as 0")
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return float(2 * precision * recall / (precision + recall))


def weighted_unweighted_accuracy(preds, golds, num_classes: int):
    """(WA, UA): overall fraction correct, and mean per-class recall.

    UA averages recalls over the classes present in the gold labels.
    """
    preds = np.asarray(preds, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    if preds.shape != golds.shape or preds.size == 0:
        raise ValueError("prediction/gold vectors must be non-empty and equal length")
    if golds.min() < 0 or golds.max() >= num_classes or preds.min() < 0 or preds.max() >= num_classes:
        raise ValueError("labels outside [0, num_classes)")
    wa = float((preds == golds).mean())
    recalls = [
        float((preds[golds == k] == k).mean()) for k in range(num_classes) if (golds == k).any()
    ]
    return wa, float(np.mean(recalls))


def kfold_split(ids, k: int = 5, seed: int = 0) -> dict:
    """Deterministic utterance-level fold assignment, fold sizes within +-1.

    Returns {id: fold_index}.
    """
    ids = list(ids)
    if len(ids) < k:
        raise ValueError(f"need at least {k} items for {k}-fold splitting")
    order = np.random.default_rng(seed).permutation(len(ids))
    return {ids[int(j)]: int(i % k) for i, j in enumerate(order)}


def count_syllables_from_frames(
    vowel_probabilities, threshold: float = 0.5, min_gap_frames: int = 3
) -> int:
    """Count maximal above-threshold runs separated by >= min_gap_frames.

    Shorter dips between runs merge the neighbors into one syllable.
    """
    probs = np.asarray(vowel_probabilities, dtype=np.float64)
    if probs.size and (probs.min() < 0 or probs.max() > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    above = probs >= threshold
    if not above.any():
        return 0
    edges = np.flatnonzero(np.diff(np.concatenate([[0], above.view(np.int8), [0]])))
    starts, ends = edges[::2], edges[1::2]
    gaps = starts[1:] - ends[:-1]
    return int(1 + (gaps >= min_gap_frames).sum())
