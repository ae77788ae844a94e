"""Versioned binary checkpoints: config, vocab, and parameter blobs.

Layout: magic "FAET", little-endian u32 format version, length-prefixed
config JSON, length-prefixed vocab JSON, then a u32 parameter count
followed by name/shape/float64 blobs in sorted-name order.  Round-trips
are bitwise exact.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .corpus import Vocab
from .embedding import TextEncoder
from .model import Model, TrainConfig

MAGIC = b"FAET"
VERSION = 1


class CheckpointError(ValueError):
    """Unreadable, corrupt, or incompatible checkpoint file."""


def save_checkpoint(model: Model, path: str) -> None:
    params = model.parameters()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        for blob in (
            json.dumps(model.config.to_json_dict(), sort_keys=True).encode(),
            json.dumps(model.vocab.to_json_dict(), sort_keys=True,
                       ensure_ascii=False).encode(),
        ):
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)
        names = sorted(params)
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            data = params[name].data
            encoded = name.encode()
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", data.ndim))
            for dim in data.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def _read(fh, n: int, what: str) -> bytes:
    chunk = fh.read(n)
    if len(chunk) != n:
        raise CheckpointError(f"truncated checkpoint while reading {what}")
    return chunk


def _read_header(fh, path: str) -> tuple[TrainConfig, Vocab]:
    if _read(fh, 4, "magic") != MAGIC:
        raise CheckpointError(f"{path}: not a FAET checkpoint")
    (version,) = struct.unpack("<I", _read(fh, 4, "version"))
    if version != VERSION:
        raise CheckpointError(
            f"{path}: format version {version} unsupported "
            f"(expected {VERSION})")
    try:
        (n,) = struct.unpack("<Q", _read(fh, 8, "config length"))
        config = TrainConfig.from_json_dict(json.loads(_read(fh, n, "config")))
        (n,) = struct.unpack("<Q", _read(fh, 8, "vocab length"))
        vocab = Vocab.from_json_dict(json.loads(_read(fh, n, "vocab")))
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: bad embedded metadata: {exc}") from exc
    return config, vocab


def read_config(path: str) -> TrainConfig:
    """Read only the embedded config (cheap peek, no parameter blobs)."""
    with open(path, "rb") as fh:
        config, _ = _read_header(fh, path)
    return config


def load_checkpoint(path: str,
                    text_encoder: TextEncoder | None = None) -> Model:
    """Rebuild a model from file; shapes are verified against the embedded
    config.  Precomputed-encoder checkpoints need the encoder passed in."""
    with open(path, "rb") as fh:
        config, vocab = _read_header(fh, path)

        state = {}
        (count,) = struct.unpack("<I", _read(fh, 4, "parameter count"))
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read(fh, 2, "name length"))
            name = _read(fh, name_len, "name").decode()
            (ndim,) = struct.unpack("<B", _read(fh, 1, "ndim"))
            shape = tuple(
                struct.unpack("<Q", _read(fh, 8, "dim"))[0] for _ in range(ndim))
            size = int(np.prod(shape)) if shape else 1
            raw = _read(fh, size * 8, f"data of {name!r}")
            state[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise CheckpointError(f"{path}: trailing bytes after parameters")

    model = Model(config, vocab, text_encoder=text_encoder)
    try:
        model.load_state(state)
    except ValueError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    return model
