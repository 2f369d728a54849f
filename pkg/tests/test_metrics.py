import numpy as np
import pytest

from maskedprosody.errors import UndefinedMetricError
from maskedprosody.metrics import (
    count_syllables_from_frames,
    f1_binary,
    kfold_split,
    pearson_corr,
    ser,
    weighted_unweighted_accuracy,
)


class TestSer:
    def test_perfect(self):
        assert ser([10, 20], [10, 20]) == 0.0

    def test_single_utterance(self):
        assert ser([10], [8]) == pytest.approx(0.2, abs=1e-12)

    def test_hand_computed_pair(self):
        # (|10-8|/10 + |20-25|/20) / 2 = (0.2 + 0.25) / 2
        assert ser([10, 20], [8, 25]) == pytest.approx(0.225, abs=1e-12)

    def test_zero_actual_excluded(self):
        with pytest.warns(UserWarning):
            value = ser([0, 10], [3, 8])
        assert value == pytest.approx(0.2, abs=1e-12)


class TestPearson:
    def test_identical(self):
        assert pearson_corr([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0, abs=1e-12)

    def test_negated(self):
        assert pearson_corr([1, 2, 3], [-1, -2, -3]) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_computed_fixture(self):
        # means 2.5/2.5, cov 1, var 1.25 each -> r = 1/1.25 = 0.8
        assert pearson_corr([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_zero_variance_raises(self):
        with pytest.raises(UndefinedMetricError):
            pearson_corr([1, 1, 1], [1, 2, 3])


class TestF1:
    def test_perfect(self):
        assert f1_binary([1, 0, 1], [1, 0, 1]) == 1.0

    def test_all_negative_predictions(self):
        assert f1_binary([0, 0, 0], [1, 0, 1]) == 0.0

    def test_hand_computed(self):
        # TP=2 FP=1 FN=1 -> precision=recall=2/3 -> F1=2/3
        golds = [1, 1, 1, 0, 0]
        preds = [1, 1, 0, 1, 0]
        assert f1_binary(preds, golds) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_no_positives_anywhere(self):
        with pytest.warns(UserWarning):
            assert f1_binary([0, 0], [0, 0]) == 0.0


class TestWaUa:
    def test_perfect(self):
        wa, ua = weighted_unweighted_accuracy([0, 1, 2], [0, 1, 2], 3)
        assert wa == 1.0 and ua == 1.0

    def test_imbalanced_recalls(self):
        # 90/10 split, recalls 1.0 and 0.0 -> WA 0.9, UA 0.5
        golds = [0] * 90 + [1] * 10
        preds = [0] * 100
        wa, ua = weighted_unweighted_accuracy(preds, golds, 2)
        assert wa == pytest.approx(0.9, abs=1e-12)
        assert ua == pytest.approx(0.5, abs=1e-12)

    def test_single_class_gold(self):
        wa, ua = weighted_unweighted_accuracy([0, 0, 1, 0], [0, 0, 0, 0], 2)
        assert ua == pytest.approx(0.75, abs=1e-12)
        assert wa == pytest.approx(0.75, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            weighted_unweighted_accuracy([], [], 2)


class TestKfold:
    def test_even_split(self):
        ids = [f"u{i}" for i in range(10)]
        folds = kfold_split(ids, k=5, seed=0)
        sizes = np.bincount(list(folds.values()), minlength=5)
        assert np.all(sizes == 2)

    def test_deterministic(self):
        ids = [f"u{i}" for i in range(23)]
        assert kfold_split(ids, 5, seed=9) == kfold_split(ids, 5, seed=9)

    def test_partition_property(self):
        ids = [f"u{i}" for i in range(23)]
        folds = kfold_split(ids, 5, seed=3)
        assert set(folds) == set(ids)
        sizes = np.bincount(list(folds.values()), minlength=5)
        assert sizes.max() - sizes.min() <= 1

    def test_too_few_items(self):
        with pytest.raises(ValueError):
            kfold_split(["a", "b"], k=5)


class TestCountSyllables:
    def test_all_zero(self):
        assert count_syllables_from_frames(np.zeros(100)) == 0

    def test_two_clean_pulses(self):
        probs = np.zeros(50)
        probs[10:14] = 1.0
        probs[30:34] = 1.0
        assert count_syllables_from_frames(probs) == 2

    def test_short_gap_merges(self):
        probs = np.zeros(30)
        probs[10:13] = 1.0
        probs[14:17] = 1.0  # 1-frame dip < min_gap_frames=3
        assert count_syllables_from_frames(probs) == 1

    def test_generator_fixture_with_12_pulses(self):
        # 12 pulses, 8 frames apart, width 4, defaults threshold 0.5 / gap 3
        probs = np.zeros(12 * 8 + 8)
        for k in range(12):
            probs[4 + 8 * k : 8 + 8 * k] = 0.9
        assert count_syllables_from_frames(probs) == 12

    def test_range_validation(self):
        with pytest.raises(ValueError):
            count_syllables_from_frames(np.array([0.5, 1.5]))
