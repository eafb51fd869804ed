"""Binary model checkpoints with bit-exact round-trips.

Byte layout (all integers little-endian; full reference in
docs/checkpoint-format.md):

    offset 0   8 bytes   magic b"KICK2KIT"
    offset 8   4 bytes   format version (uint32), currently 1
    offset 12  8 bytes   header length N (uint64)
    offset 20  N bytes   UTF-8 JSON header: config, both vocabularies,
                         and the parameter manifest (name + shape, in
                         declared order)
    then                 raw float64 little-endian C-order parameter data,
                         one block per manifest entry
    trailer    32 bytes  SHA-256 over every preceding byte

Loading verifies magic, version, checksum, and that the manifest shapes
match the shapes the config dictates, so a truncated, corrupted, or
mismatched file fails with a specific error instead of a broken model.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import LstmLayer, ModelConfig, ModelParams, expected_shapes, iter_param_arrays
from .tokens import Vocabulary

MAGIC = b"KICK2KIT"
FORMAT_VERSION = 1
_CHECKSUM_BYTES = 32


class CheckpointError(ValueError):
    """Unreadable, corrupted, or inconsistent checkpoint file."""


@dataclass(frozen=True)
class ModelBundle:
    """A frozen trained model plus the vocabularies it was trained with."""

    params: ModelParams
    source_vocab: Vocabulary
    target_vocab: Vocabulary

    @property
    def config(self) -> ModelConfig:
        return self.params.config


def save_checkpoint(
    params: ModelParams,
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    destination: str | Path,
) -> None:
    manifest = [
        {"name": name, "shape": list(arr.shape)}
        for name, arr in iter_param_arrays(params)
    ]
    header = {
        "config": params.config.as_dict(),
        "source_vocab": {"role": source_vocab.role, "words": list(source_vocab.words)},
        "target_vocab": {"role": target_vocab.role, "words": list(target_vocab.words)},
        "params": manifest,
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", FORMAT_VERSION)
    blob += struct.pack("<Q", len(header_bytes))
    blob += header_bytes
    for _, arr in iter_param_arrays(params):
        blob += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    blob += hashlib.sha256(blob).digest()
    Path(destination).write_bytes(bytes(blob))


def _vocab_from_header(raw: dict, which: str) -> Vocabulary:
    try:
        return Vocabulary(tuple(raw["words"]), raw["role"])
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed {which} vocabulary in header: {exc}") from None


def load_checkpoint(source: str | Path) -> ModelBundle:
    blob = Path(source).read_bytes()
    if len(blob) < len(MAGIC) + 12 + _CHECKSUM_BYTES:
        raise CheckpointError("truncated checkpoint: shorter than fixed fields")
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError("bad magic bytes: not a model checkpoint")
    (version,) = struct.unpack_from("<I", blob, len(MAGIC))
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format version {version} (expected {FORMAT_VERSION})"
        )
    digest = blob[-_CHECKSUM_BYTES:]
    body = blob[:-_CHECKSUM_BYTES]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checksum mismatch: checkpoint is corrupted")
    (header_len,) = struct.unpack_from("<Q", blob, len(MAGIC) + 4)
    header_start = len(MAGIC) + 12
    header_end = header_start + header_len
    if header_end > len(body):
        raise CheckpointError("truncated checkpoint: header extends past file")
    try:
        header = json.loads(body[header_start:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable header: {exc}") from None
    try:
        config = ModelConfig(**header["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"bad config in header: {exc}") from None

    shapes = expected_shapes(config)
    manifest = header.get("params", [])
    declared = {entry.get("name"): tuple(entry.get("shape", ())) for entry in manifest}
    if declared != shapes:
        raise CheckpointError(
            "parameter manifest does not match the shapes the config dictates"
        )

    source_vocab = _vocab_from_header(header.get("source_vocab", {}), "source")
    target_vocab = _vocab_from_header(header.get("target_vocab", {}), "target")
    if len(source_vocab) != config.source_vocab_size:
        raise CheckpointError(
            f"source vocabulary has {len(source_vocab)} words, "
            f"config says {config.source_vocab_size}"
        )
    if len(target_vocab) != config.target_vocab_size:
        raise CheckpointError(
            f"target vocabulary has {len(target_vocab)} words, "
            f"config says {config.target_vocab_size}"
        )

    offset = header_end
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest:
        name = entry["name"]
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(body):
            raise CheckpointError(f"truncated checkpoint: parameter {name} incomplete")
        arrays[name] = (
            np.frombuffer(body, dtype="<f8", count=count, offset=offset)
            .reshape(shape)
            .astype(np.float64)
        )
        offset += nbytes
    if offset != len(body):
        raise CheckpointError("trailing bytes after declared parameters")

    def side(name: str) -> list[LstmLayer]:
        return [
            LstmLayer(
                arrays[f"{name}.{layer}.w"],
                arrays[f"{name}.{layer}.u"],
                arrays[f"{name}.{layer}.b"],
            )
            for layer in range(config.layer_count)
        ]

    params = ModelParams(
        config, side("encoder"), side("decoder"), arrays["proj_w"], arrays["proj_b"]
    )
    return ModelBundle(params, source_vocab, target_vocab)
