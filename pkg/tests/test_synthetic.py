import numpy as np
import pytest

from maskedprosody.synthetic import (
    LabeledUtterance,
    SynthConfig,
    generate_synthetic_corpus,
)


def test_deterministic_given_seed():
    cfg = SynthConfig(num_utterances=12, seed=42)
    a = generate_synthetic_corpus(cfg)
    b = generate_synthetic_corpus(cfg)
    for ta, tb in zip(a.tracks, b.tracks):
        np.testing.assert_array_equal(ta.pitch, tb.pitch)
        np.testing.assert_array_equal(ta.energy, tb.energy)
        np.testing.assert_array_equal(ta.vad, tb.vad)
    for la, lb in zip(a.labels, b.labels):
        assert la.utterance_label == lb.utterance_label
        assert la.syllable_count == lb.syllable_count
        assert la.word_spans == lb.word_spans
        np.testing.assert_array_equal(la.frame_labels, lb.frame_labels)
        np.testing.assert_array_equal(la.prominence, lb.prominence)
        np.testing.assert_array_equal(la.boundary, lb.boundary)


def test_no_pauses_means_no_boundaries():
    cfg = SynthConfig(
        num_utterances=10, pause_probability=0.0, class_table=[(0.0, 1.0, 1.0)], seed=7
    )
    corpus = generate_synthetic_corpus(cfg)
    for lab in corpus.labels:
        assert lab.boundary.sum() == 0


def test_pulse_rate_oracle():
    # 4 Hz pulses for 3 s -> 12 +- 1 syllables
    cfg = SynthConfig(
        num_utterances=40,
        duration_range=(3.0, 3.0),
        pulse_rate_range=(4.0, 4.0),
        class_table=[(0.0, 1.0, 1.0)],
        pause_probability=0.0,
        rate_jitter=0.02,
        seed=3,
    )
    counts = [lab.syllable_count for lab in generate_synthetic_corpus(cfg).labels]
    assert min(counts) >= 11 and max(counts) <= 13


def test_mean_pitch_bayes_oracle():
    # classes separated only by +-1 Hz offsets; thresholding the mean raw
    # pitch is Bayes-optimal by construction and nearly perfect
    cfg = SynthConfig(
        num_utterances=300,
        duration_range=(3.0, 3.0),
        declination_hz_per_s=0.0,
        slow_modulation_amp_hz=0.0,
        pulse_wiggle_amp_hz=2.0,
        class_table=[(-1.0, 1.0, 1.0), (1.0, 1.0, 1.0)],
        seed=5,
    )
    corpus = generate_synthetic_corpus(cfg)
    means = np.array([np.nanmean(p) for p in corpus.raw_pitch])
    golds = np.array([lab.utterance_label for lab in corpus.labels])
    accuracy = ((means > cfg.f0_base_hz).astype(int) == golds).mean()
    assert accuracy >= 0.99


def test_track_and_label_alignment():
    corpus = generate_synthetic_corpus(SynthConfig(num_utterances=20, seed=1))
    for track, lab in zip(corpus.tracks, corpus.labels):
        assert len(lab.frame_labels) == track.num_frames
        assert len(lab.prominence) == len(lab.boundary) == len(lab.word_spans)
        assert all(0 <= s < e <= track.num_frames for s, e in lab.word_spans)
        assert lab.syllable_count >= 1
        # pauses carry vad == 0
        assert set(np.unique(track.vad)) <= {0, 1}


def test_vad_zero_inside_pauses_matches_frame_labels():
    corpus = generate_synthetic_corpus(
        SynthConfig(num_utterances=10, pause_probability=1.0, seed=2)
    )
    for track, lab in zip(corpus.tracks, corpus.labels):
        # no pulse labels where voice activity is off
        assert not (lab.frame_labels.astype(bool) & (track.vad == 0)).any()


def test_invalid_configs_rejected():
    with pytest.raises(ValueError):
        SynthConfig(class_table=[(0.0, 1.0, 1.0), (0.0, 1.0, 1.0)])
    with pytest.raises(ValueError):
        SynthConfig(pulse_rate_range=(0.5, 4.0))


def test_labeled_utterance_validates_spans():
    with pytest.raises(ValueError):
        LabeledUtterance(
            utterance_id="x",
            word_spans=[(5, 10), (8, 12)],
            frame_labels=np.zeros(20, dtype=np.int64),
            prominence=np.zeros(2, dtype=np.int64),
            boundary=np.zeros(2, dtype=np.int64),
            utterance_label=0,
            syllable_count=1,
        )
