import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskedprosody.codec import (
    TokenTrack,
    build_codebook,
    default_codebooks,
    dequantize,
    quantize,
    tokenize,
)
from maskedprosody.errors import InvalidCodebookError, InvalidTokenError
from maskedprosody.features import ProsodyTrack


def test_two_bin_codebook_edges():
    cb = build_codebook(2, -3.0, 3.0)
    np.testing.assert_allclose(cb.edges, [-3.0, 0.0, 3.0])


def test_default_bin_width():
    cb = build_codebook(128, -3.0, 3.0)
    widths = np.diff(cb.edges)
    np.testing.assert_allclose(widths, 6.0 / 128)
    assert widths[0] == pytest.approx(0.046875)


def test_quarter_codebook_edges():
    cb = build_codebook(4, 0.0, 1.0)
    np.testing.assert_allclose(cb.edges, [0.0, 0.25, 0.5, 0.75, 1.0])


def test_invalid_codebooks():
    with pytest.raises(InvalidCodebookError):
        build_codebook(1, -3.0, 3.0)
    with pytest.raises(InvalidCodebookError):
        build_codebook(4, 2.0, 1.0)


def test_out_of_support_clips():
    cb = build_codebook(128, -3.0, 3.0)
    assert quantize(np.array([-10.0]), cb)[0] == 0
    assert quantize(np.array([10.0]), cb)[0] == 127


def test_bin_center_round_trip():
    cb = build_codebook(16, -3.0, 3.0)
    centers = cb.centers
    tokens = quantize(centers, cb)
    np.testing.assert_array_equal(tokens, np.arange(16))
    np.testing.assert_allclose(dequantize(tokens, cb), centers)


def test_round_trip_error_bound():
    # brute-force bound: |dequantize(quantize(v)) - v| <= bin_width / 2
    cb = build_codebook(128, -3.0, 3.0)
    values = np.random.default_rng(0).uniform(-3, 3, size=1000)
    err = np.abs(dequantize(quantize(values, cb), cb) - values)
    assert err.max() <= (6.0 / 128) / 2 + 1e-12


def test_mask_token_rejected_by_dequantize():
    cb = build_codebook(8, -3.0, 3.0)
    with pytest.raises(InvalidTokenError):
        dequantize(np.array([8]), cb)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=50))
@settings(max_examples=60, deadline=None)
def test_quantizer_monotone(values):
    cb = build_codebook(32, -3.0, 3.0)
    v = np.sort(np.asarray(values))
    tokens = quantize(v, cb)
    assert np.all(np.diff(tokens) >= 0)


def test_vad_codebook_occupies_edge_bins():
    cbs = default_codebooks(128)
    tokens = quantize(np.array([0.0, 1.0]), cbs["vad"])
    assert tokens[0] == 0 and tokens[1] == 127


def test_tokenize_produces_aligned_streams():
    rng = np.random.default_rng(1)
    n = 40
    track = ProsodyTrack(
        pitch=rng.normal(size=n),
        energy=rng.normal(size=n),
        vad=(rng.random(n) > 0.3).astype(np.uint8),
        hop_seconds=0.01,
    )
    tt = tokenize(track, default_codebooks(64))
    assert tt.num_frames == n
    for name in ("pitch", "energy", "vad"):
        stream = tt.stream(name)
        assert stream.min() >= 0 and stream.max() <= 63


def test_token_track_validates_range():
    cbs = default_codebooks(8)
    with pytest.raises(InvalidTokenError):
        TokenTrack(pitch=np.array([9]), energy=np.array([0]), vad=np.array([0]), codebooks=cbs)
