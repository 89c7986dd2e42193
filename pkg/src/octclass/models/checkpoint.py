"""Checkpoint container: JSON header + raw little-endian float32 arrays.

Layout:
    bytes 0..8    magic "OCTCKPT1"
    bytes 8..16   header length, unsigned 64-bit little-endian
    header        UTF-8 JSON: config, class order, layer manifest,
                  per-array {name, shape, dtype, offset, nbytes, sha256}
    payload       concatenated raw array bytes, float32 little-endian

Per-array SHA-256 digests catch truncation and bit corruption on load.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from ..errors import ChecksumMismatch, ConfigMismatch
from .base import ModelConfig, ModelHandle, build_model

MAGIC = b"OCTCKPT1"
FORMAT_VERSION = 1


def save_checkpoint(handle: ModelHandle, path: str) -> None:
    arrays = handle.float_state_arrays()
    manifest = []
    blobs = []
    offset = 0
    for name, arr in arrays.items():
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        manifest.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": "<f4",
            "offset": offset,
            "nbytes": len(raw),
            "sha256": hashlib.sha256(raw).hexdigest(),
        })
        blobs.append(raw)
        offset += len(raw)

    header = json.dumps({
        "format_version": FORMAT_VERSION,
        "config": handle.config.to_dict(),
        "class_order": list(handle.class_order),
        "layer_names": list(handle.layer_names),
        "arrays": manifest,
    }).encode("utf-8")

    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for raw in blobs:
            f.write(raw)


def load_checkpoint(path: str) -> ModelHandle:
    with open(path, "rb") as f:
        data = f.read()

    if len(data) < len(MAGIC) + 8 or data[:len(MAGIC)] != MAGIC:
        raise ChecksumMismatch(f"not a checkpoint file: {path}")
    (header_len,) = struct.unpack("<Q", data[8:16])
    header_end = 16 + header_len
    if len(data) < header_end:
        raise ChecksumMismatch(f"truncated checkpoint header: {path}")
    try:
        header = json.loads(data[16:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ChecksumMismatch(f"corrupt checkpoint header: {path}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ConfigMismatch(
            f"unsupported checkpoint format version: {header.get('format_version')}"
        )

    config = ModelConfig.from_dict(header["config"])
    class_order = tuple(header["class_order"])
    if len(class_order) != config.num_classes:
        raise ConfigMismatch(
            f"class_order length {len(class_order)} does not match "
            f"num_classes {config.num_classes}"
        )

    payload = data[header_end:]
    arrays: dict[str, np.ndarray] = {}
    for item in header["arrays"]:
        start, nbytes = item["offset"], item["nbytes"]
        raw = payload[start:start + nbytes]
        if len(raw) != nbytes:
            raise ChecksumMismatch(
                f"truncated checkpoint payload for array {item['name']!r}"
            )
        if hashlib.sha256(raw).hexdigest() != item["sha256"]:
            raise ChecksumMismatch(
                f"checksum mismatch for array {item['name']!r}"
            )
        arrays[item["name"]] = np.frombuffer(raw, dtype="<f4").reshape(item["shape"]).copy()

    handle = build_model(config)
    handle.class_order = class_order
    try:
        handle.load_state_arrays(arrays)
    except Exception as exc:
        raise ConfigMismatch(f"checkpoint arrays do not fit the model: {exc}") from exc
    return handle


def checkpoint_digest(path: str) -> str:
    """SHA-256 of the whole checkpoint file."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
