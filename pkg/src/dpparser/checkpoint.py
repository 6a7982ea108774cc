"""Versioned checkpoint container.

Layout: 8 magic bytes, a little-endian uint32 format version, a uint32 header
length, a UTF-8 JSON header, then every tensor as little-endian float32 in
header order. The header records the model kind, feature set, training mode,
decoder, vocabulary, hyperparameters, tensor shapes and a CRC32 of the data.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .corpus import Vocabulary
from .neural import ModelConfig, ScoreModel
from .parser import Parser

MAGIC = b"DPPARSE\x00"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, parser: Parser, extra: dict | None = None) -> None:
    model = parser.model
    names = sorted(model.params)
    blobs, index, offset = [], [], 0
    for name in names:
        data = np.ascontiguousarray(model.params[name], dtype="<f4").tobytes()
        index.append({"name": name, "shape": list(model.params[name].shape), "offset": offset})
        blobs.append(data)
        offset += len(data)
    body = b"".join(blobs)
    header = {
        "kind": str(getattr(model.kind, "value", model.kind)),
        "features": int(model.features),
        "mode": parser.mode,
        "decoder": parser.decoder,
        "n_words": model.n_words,
        "n_tags": model.n_tags,
        "config": asdict(model.config),
        "vocab": parser.vocab.to_dict(),
        "tensors": index,
        "crc32": zlib.crc32(body),
        "extra": extra or {},
    }
    raw = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC + struct.pack("<II", VERSION, len(raw)) + raw + body)


def read_header(path) -> dict:
    return _read(path)[0]


def _read(path):
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a parser checkpoint")
    version, hlen = struct.unpack("<II", data[8:16])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(data[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupted header ({exc})")
    body = data[16 + hlen:]
    if zlib.crc32(body) != header.get("crc32"):
        raise CheckpointError(f"{path}: tensor data fails its checksum")
    return header, body


def load_checkpoint(path, dtype: str | None = None) -> Parser:
    header, body = _read(path)
    try:
        cfg = dict(header["config"])
        if dtype is not None:
            cfg["dtype"] = dtype
        params = {}
        for entry in header["tensors"]:
            count = int(np.prod(entry["shape"], dtype=np.int64))
            arr = np.frombuffer(body, dtype="<f4", count=count, offset=entry["offset"])
            params[entry["name"]] = arr.reshape(entry["shape"])
        model = ScoreModel.from_params(header["kind"], header["n_words"], header["n_tags"],
                                       ModelConfig(**cfg), header["features"], params)
        vocab = Vocabulary.from_dict(header["vocab"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint ({exc})")
    return Parser(model, vocab, header["mode"], header["decoder"])
