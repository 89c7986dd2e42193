"""Dataset ingestion: directory scanning, image decoding, splits, batching.

Dataset layout on disk is one subdirectory per class name under a root
directory. Images are decoded, bilinear-resized to 224x224, replicated to
3 channels when grayscale, and scaled to [0,1] by the source bit depth.
"""

from __future__ import annotations

import io
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    EmptyDataset,
    EmptySplit,
    InvalidFractions,
    MissingClassDir,
)
from .labels import CLASS_NAMES, NUM_CLASSES

logger = logging.getLogger(__name__)

IMAGE_SIZE = 224
SPLITS = ("train", "val", "test")

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".gif", ".webp"}

# 16-bit (or wider) grayscale modes PIL may report; scaled by 65535
_WIDE_MODES = {"I", "I;16", "I;16B", "I;16L", "I;16N"}


@dataclass
class OctImage:
    pixels: np.ndarray  # 224 x 224 x 3 float32 in [0,1]
    source_path: str
    original_size: tuple[int, int]  # (width, height)


@dataclass
class ManifestEntry:
    path: str
    class_name: str
    split: str | None = None


@dataclass
class DatasetManifest:
    """Immutable listing of dataset files, their classes, and split tags."""

    entries: list[ManifestEntry]
    seed: int = 0
    classes: tuple[str, ...] = CLASS_NAMES

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in self.classes}
        for e in self.entries:
            counts[e.class_name] += 1
        return counts

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "classes": list(self.classes),
            "entries": [
                {"path": e.path, "class": e.class_name, "split": e.split}
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        doc = json.loads(text)
        entries = [
            ManifestEntry(d["path"], d["class"], d.get("split"))
            for d in doc["entries"]
        ]
        return cls(entries=entries, seed=doc.get("seed", 0),
                   classes=tuple(doc["classes"]))

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path: str) -> "DatasetManifest":
        with open(path) as f:
            return cls.from_json(f.read())


@dataclass
class Batch:
    images: np.ndarray  # N x 224 x 224 x 3 float32
    labels: np.ndarray  # N x num_classes float32, rows sum to 1


def scan_dataset_dir(root: str) -> DatasetManifest:
    """Build a manifest from a class-per-directory tree.

    Subdirectory names are matched case-insensitively against the canonical
    class names; unrecognized subdirectories are logged and skipped.
    """
    if not os.path.isdir(root):
        raise MissingClassDir(f"dataset root is not a directory: {root}")

    canonical = {name.upper(): name for name in CLASS_NAMES}
    found: dict[str, str] = {}
    for entry in sorted(os.listdir(root)):
        full = os.path.join(root, entry)
        if not os.path.isdir(full):
            continue
        name = canonical.get(entry.upper())
        if name is None:
            logger.warning("ignoring unrecognized class directory: %s", full)
            continue
        found[name] = full

    missing = [name for name in CLASS_NAMES if name not in found]
    if missing:
        raise MissingClassDir(
            f"missing class directories under {root}: {', '.join(missing)}"
        )

    entries: list[ManifestEntry] = []
    for name in CLASS_NAMES:
        class_dir = found[name]
        for fname in sorted(os.listdir(class_dir)):
            ext = os.path.splitext(fname)[1].lower()
            if ext in IMAGE_EXTENSIONS:
                entries.append(ManifestEntry(os.path.join(class_dir, fname), name))

    if not entries:
        raise EmptyDataset(f"no decodable images found under {root}")

    counts = {name: 0 for name in CLASS_NAMES}
    for e in entries:
        counts[e.class_name] += 1
    logger.info("scanned %d images: %s", len(entries), counts)
    return DatasetManifest(entries=entries)


def _check_image(pixels: np.ndarray, source: str) -> None:
    if pixels.shape != (IMAGE_SIZE, IMAGE_SIZE, 3):
        raise DecodeError(f"bad decoded shape {pixels.shape} for {source}")
    if not np.isfinite(pixels).all():
        raise DecodeError(f"non-finite pixel values in {source}")
    if pixels.min() < 0.0 or pixels.max() > 1.0:
        raise DecodeError(f"pixel values outside [0,1] in {source}")


def decode_image(data: bytes, source: str = "<bytes>") -> OctImage:
    """Decode raw image bytes into a normalized OctImage."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            original_size = im.size
            mode = im.mode
            if mode in _WIDE_MODES:
                im = im.resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
                arr = np.asarray(im, dtype=np.float32) / 65535.0
            else:
                if mode not in ("L", "RGB"):
                    im = im.convert("RGB")
                im = im.resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
                arr = np.asarray(im, dtype=np.float32) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode image {source}: {exc}") from exc

    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    # wide formats can exceed the nominal bit-depth maximum; clamp defensively
    np.clip(arr, 0.0, 1.0, out=arr)
    _check_image(arr, source)
    return OctImage(pixels=arr, source_path=source, original_size=original_size)


def load_image(path: str) -> OctImage:
    """Load, resize, and normalize one image file."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise DecodeError(f"cannot read image file {path}: {exc}") from exc
    return decode_image(data, source=path)


def make_splits(
    manifest: DatasetManifest,
    fractions: tuple[float, float, float],
    seed: int,
) -> DatasetManifest:
    """Assign train/val/test splits, stratified per class.

    Deterministic for a fixed seed. Each class lands in every split whenever
    its count permits.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise InvalidFractions(f"fractions must be three positive values: {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidFractions(f"fractions must sum to 1.0: {fractions}")

    rng = np.random.default_rng(seed)
    by_class: dict[str, list[int]] = {name: [] for name in manifest.classes}
    for i, e in enumerate(manifest.entries):
        by_class[e.class_name].append(i)

    assignment: dict[int, str] = {}
    for name in manifest.classes:
        idxs = np.array(by_class[name], dtype=np.int64)
        if idxs.size == 0:
            continue
        rng.shuffle(idxs)
        n = idxs.size
        n_train = int(np.floor(n * fractions[0]))
        n_val = int(np.floor(n * fractions[1]))
        counts = [n_train, n_val, n - n_train - n_val]
        # keep every split populated when the class has enough examples
        if n >= 3:
            while min(counts) == 0:
                counts[counts.index(max(counts))] -= 1
                counts[counts.index(min(counts))] += 1
        offset = 0
        for split, c in zip(SPLITS, counts):
            for i in idxs[offset:offset + c]:
                assignment[int(i)] = split
            offset += c

    entries = [
        ManifestEntry(e.path, e.class_name, assignment.get(i))
        for i, e in enumerate(manifest.entries)
    ]
    return DatasetManifest(entries=entries, seed=seed, classes=manifest.classes)


def one_hot(class_indices: np.ndarray, num_classes: int = NUM_CLASSES) -> np.ndarray:
    out = np.zeros((len(class_indices), num_classes), dtype=np.float32)
    out[np.arange(len(class_indices)), class_indices] = 1.0
    return out


def batch_iterator(
    manifest: DatasetManifest,
    split: str,
    batch_size: int,
    shuffle_seed: int,
    epoch: int = 0,
    shuffle: bool = True,
):
    """Yield one epoch of Batch objects covering the split exactly once.

    The shuffle order is a deterministic function of (shuffle_seed, epoch);
    the final batch may be short.
    """
    if split not in SPLITS:
        raise ValueError(f"unknown split: {split}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1: {batch_size}")
    entries = manifest.split_entries(split)
    if not entries:
        raise EmptySplit(f"split {split!r} has no entries")

    class_to_index = {name: i for i, name in enumerate(manifest.classes)}
    order = np.arange(len(entries))
    if shuffle:
        np.random.default_rng([shuffle_seed, epoch]).shuffle(order)

    for start in range(0, len(entries), batch_size):
        chunk = [entries[i] for i in order[start:start + batch_size]]
        images = np.stack([load_image(e.path).pixels for e in chunk])
        labels = one_hot(
            np.array([class_to_index[e.class_name] for e in chunk]),
            num_classes=len(manifest.classes),
        )
        yield Batch(images=images, labels=labels)
