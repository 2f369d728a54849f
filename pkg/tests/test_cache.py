import numpy as np
import pytest

from maskedprosody.cache import FeatureCache, read_record, write_record
from maskedprosody.errors import MissingArtifactError, ParseError
from maskedprosody.features import ProsodyTrack


def sample_track(n=50, seed=0):
    rng = np.random.default_rng(seed)
    return ProsodyTrack(
        pitch=rng.normal(size=n),
        energy=rng.normal(size=n),
        vad=(rng.random(n) > 0.5).astype(np.uint8),
        hop_seconds=0.01,
    )


def test_record_round_trip(tmp_path):
    path = tmp_path / "u.feat"
    arrays = {
        "pitch": np.arange(5, dtype="<f4"),
        "vad": np.array([0, 1, 1, 0, 1], dtype=np.uint8),
        "matrix": np.arange(10, dtype="<f4").reshape(5, 2),
    }
    write_record(path, "u", 0.01, arrays)
    header, loaded = read_record(path)
    assert header["utterance_id"] == "u"
    assert header["num_frames"] == 5
    for name in arrays:
        np.testing.assert_array_equal(loaded[name], arrays[name])
    assert loaded["vad"].dtype == np.uint8


def test_cache_track_round_trip(tmp_path):
    cache = FeatureCache(tmp_path / "cache")
    track = sample_track()
    cache.put_track("utt-1", track)
    loaded = cache.get_track("utt-1")
    np.testing.assert_allclose(loaded.pitch, track.pitch, atol=1e-6)
    np.testing.assert_allclose(loaded.energy, track.energy, atol=1e-6)
    np.testing.assert_array_equal(loaded.vad, track.vad)
    assert loaded.hop_seconds == track.hop_seconds
    # record carries three float32 arrays plus exact uint8 vad flags
    arrays = cache.get_arrays("utt-1")
    assert set(arrays) == {"pitch", "energy", "vad_f32", "vad"}
    np.testing.assert_array_equal(arrays["vad_f32"], track.vad.astype("<f4"))


def test_cache_extras_ride_along(tmp_path):
    cache = FeatureCache(tmp_path / "cache")
    track = sample_track()
    cwt_features = np.random.default_rng(1).normal(size=(50, 18)).astype("<f4")
    cache.put_track("utt-2", track, extras={"cwt": cwt_features})
    arrays = cache.get_arrays("utt-2")
    np.testing.assert_array_equal(arrays["cwt"], cwt_features)


def test_manifest_round_trip(tmp_path):
    cache = FeatureCache(tmp_path / "cache")
    entries = [
        {"utterance_id": "a", "duration_seconds": 1.0, "num_frames": 100},
        {"utterance_id": "b", "duration_seconds": 2.0, "num_frames": 200},
    ]
    cache.write_manifest(entries, config_hash="abc123")
    manifest = cache.read_manifest()
    assert manifest["config_hash"] == "abc123"
    assert cache.ids() == ["a", "b"]


def test_missing_manifest_raises(tmp_path):
    with pytest.raises(MissingArtifactError):
        FeatureCache(tmp_path / "empty").read_manifest()


def test_non_record_file_rejected(tmp_path):
    path = tmp_path / "junk.feat"
    path.write_bytes(b"garbage bytes here")
    with pytest.raises(ParseError):
        read_record(path)
