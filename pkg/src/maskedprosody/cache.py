"""On-disk feature cache: one record file per utterance plus a manifest.

Record layout (``<id>.feat``):

    bytes 0..7    magic b"MPMFEAT1"
    bytes 8..11   uint32 little-endian header length
    header        UTF-8 JSON: utterance_id, hop_seconds, num_frames, and
                  an array index of {name, dtype, shape, offset} entries
    payload       arrays concatenated little-endian in index order

A prosody record stores pitch/energy/vad as float32 plus the exact
binary VAD flags as uint8. Additional named float32 matrices (e.g. CWT
features) ride in the same container. The manifest (``manifest.json``)
lists utterance ids, durations and the producing config hash.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import MissingArtifactError, ParseError
from .features import ProsodyTrack

MAGIC = b"MPMFEAT1"

_DTYPES = {"<f4": "<f4", "|u1": "|u1"}


def write_record(path, utterance_id: str, hop_seconds: float, arrays: dict[str, np.ndarray]):
    index = []
    blobs = []
    offset = 0
    num_frames = None
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        dtype = "|u1" if arr.dtype == np.uint8 else "<f4"
        arr = arr.astype(dtype)
        if num_frames is None:
            num_frames = arr.shape[0]
        index.append({"name": name, "dtype": dtype, "shape": list(arr.shape), "offset": offset})
        blob = np.ascontiguousarray(arr).tobytes()
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps(
        {
            "utterance_id": utterance_id,
            "hop_seconds": hop_seconds,
            "num_frames": num_frames,
            "arrays": index,
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def read_record(path):
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ParseError(f"{path}: not a feature record")
    (header_len,) = struct.unpack_from("<I", raw, len(MAGIC))
    header = json.loads(raw[len(MAGIC) + 4 : len(MAGIC) + 4 + header_len].decode("utf-8"))
    payload = raw[len(MAGIC) + 4 + header_len :]
    arrays = {}
    for entry in header["arrays"]:
        dtype = _DTYPES[entry["dtype"]]
        count = int(np.prod(entry["shape"]))
        arr = np.frombuffer(payload, dtype=dtype, count=count, offset=entry["offset"])
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return header, arrays


class FeatureCache:
    """Directory of per-utterance records plus a manifest."""

    def __init__(self, directory):
        self.directory = Path(directory)

    @property
    def manifest_path(self) -> Path:
        return self.directory / "manifest.json"

    def write_manifest(self, entries: list[dict], config_hash: str = ""):
        self.directory.mkdir(parents=True, exist_ok=True)
        manifest = {"config_hash": config_hash, "utterances": entries}
        self.manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True))

    def read_manifest(self) -> dict:
        if not self.manifest_path.exists():
            raise MissingArtifactError(f"no manifest at {self.manifest_path}")
        return json.loads(self.manifest_path.read_text())

    def put_track(self, utterance_id: str, track: ProsodyTrack, extras: dict | None = None):
        self.directory.mkdir(parents=True, exist_ok=True)
        arrays = {
            "pitch": track.pitch.astype("<f4"),
            "energy": track.energy.astype("<f4"),
            "vad_f32": track.vad.astype("<f4"),
            "vad": track.vad.astype(np.uint8),
        }
        for name, arr in (extras or {}).items():
            arrays[name] = np.asarray(arr, dtype="<f4")
        write_record(self.record_path(utterance_id), utterance_id, track.hop_seconds, arrays)

    def get_track(self, utterance_id: str) -> ProsodyTrack:
        header, arrays = read_record(self.record_path(utterance_id))
        return ProsodyTrack(
            pitch=arrays["pitch"].astype(np.float64),
            energy=arrays["energy"].astype(np.float64),
            vad=arrays["vad"],
            hop_seconds=header["hop_seconds"],
        )

    def get_arrays(self, utterance_id: str) -> dict[str, np.ndarray]:
        _, arrays = read_record(self.record_path(utterance_id))
        return arrays

    def record_path(self, utterance_id: str) -> Path:
        return self.directory / f"{utterance_id}.feat"

    def ids(self) -> list[str]:
        return [entry["utterance_id"] for entry in self.read_manifest()["utterances"]]
