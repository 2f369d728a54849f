"""Portable binary checkpoint container.

Byte layout of a checkpoint file:

    bytes 0..7    magic b"MPMCKPT1"
    bytes 8..11   uint32 little-endian manifest length in bytes
    manifest      UTF-8 JSON: format_version, model config, training
                  metadata, codebook parameters, and a tensor index of
                  {name, shape, offset, nbytes} entries (dtype float32)
    payload       the tensors, concatenated little-endian float32 in
                  index order; offsets are relative to the payload start

Every per-feature codebook also stores its bin edges as a float32 tensor
named ``codebook.<feature>.edges`` in the payload.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import torch

from .codec import FEATURES, Codebook
from .errors import CheckpointError
from .model import MaskedProsodyModel, ModelConfig

MAGIC = b"MPMCKPT1"
FORMAT_VERSION = 1


@dataclass
class MpmCheckpoint:
    config: ModelConfig
    tensors: dict[str, np.ndarray]  # float32, includes codebook edge arrays
    codebooks: dict[str, Codebook]
    metadata: dict

    @classmethod
    def from_model(cls, model, config, codebooks, metadata) -> "MpmCheckpoint":
        tensors = {
            name: param.detach().cpu().numpy().astype(np.float32, copy=True)
            for name, param in model.state_dict().items()
        }
        for name, cb in codebooks.items():
            tensors[f"codebook.{name}.edges"] = cb.edges.astype(np.float32)
        return cls(config=config, tensors=tensors, codebooks=dict(codebooks), metadata=metadata)

    def build_model(self) -> MaskedProsodyModel:
        """Instantiate the model with the stored weights, in eval mode."""
        model = MaskedProsodyModel(self.config)
        state = {
            name: torch.from_numpy(self.tensors[name].copy())
            for name in model.state_dict()
        }
        model.load_state_dict(state)
        model.eval()
        return model

    def save(self, path) -> None:
        order = sorted(self.tensors)
        index = []
        offset = 0
        for name in order:
            arr = np.ascontiguousarray(self.tensors[name], dtype="<f4")
            index.append(
                {"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": arr.nbytes}
            )
            offset += arr.nbytes
        manifest = {
            "format_version": FORMAT_VERSION,
            "config": _config_dict(self.config),
            "metadata": self.metadata,
            "codebooks": {
                name: {"size": cb.size, "lower_clip": cb.lower_clip, "upper_clip": cb.upper_clip}
                for name, cb in self.codebooks.items()
            },
            "tensors": index,
        }
        blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for name in order:
                fh.write(np.ascontiguousarray(self.tensors[name], dtype="<f4").tobytes())

    @classmethod
    def load(cls, path) -> "MpmCheckpoint":
        raw = Path(path).read_bytes()
        if raw[: len(MAGIC)] != MAGIC:
            raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
        (manifest_len,) = struct.unpack_from("<I", raw, len(MAGIC))
        header_end = len(MAGIC) + 4 + manifest_len
        try:
            manifest = json.loads(raw[len(MAGIC) + 4 : header_end].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: malformed manifest: {exc}") from exc
        if manifest.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(
                f"{path}: unsupported format version {manifest.get('format_version')}"
            )
        payload = raw[header_end:]
        tensors = {}
        for entry in manifest["tensors"]:
            start, nbytes = entry["offset"], entry["nbytes"]
            if start + nbytes > len(payload):
                raise CheckpointError(f"{path}: tensor {entry['name']} exceeds payload")
            arr = np.frombuffer(payload[start : start + nbytes], dtype="<f4")
            tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
        codebooks = {
            name: Codebook(spec["size"], spec["lower_clip"], spec["upper_clip"])
            for name, spec in manifest["codebooks"].items()
        }
        config = ModelConfig(**manifest["config"])
        return cls(config=config, tensors=tensors, codebooks=codebooks, metadata=manifest["metadata"])


def _config_dict(config: ModelConfig) -> dict:
    d = asdict(config)
    d["codebook_sizes"] = {k: int(v) for k, v in config.codebook_sizes.items()}
    return d
