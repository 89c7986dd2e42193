"""Dataset scanning, decoding, splits, and batching."""

import io
import os

import numpy as np
import pytest
from PIL import Image

from octclass.data import (
    IMAGE_SIZE,
    DatasetManifest,
    ManifestEntry,
    batch_iterator,
    decode_image,
    load_image,
    make_splits,
    one_hot,
    scan_dataset_dir,
)
from octclass.errors import (
    DecodeError,
    EmptyDataset,
    EmptySplit,
    InvalidFractions,
    MissingClassDir,
)
from octclass.labels import CLASS_NAMES


def png_bytes(arr):
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


class TestScan:
    def test_counts_all_classes(self, dataset_root):
        manifest = scan_dataset_dir(dataset_root)
        assert manifest.class_counts() == {name: 4 for name in CLASS_NAMES}
        assert len(manifest.entries) == 32

    def test_case_insensitive_dirs(self, tmp_path):
        for name in CLASS_NAMES:
            d = tmp_path / name.lower()
            d.mkdir()
            Image.fromarray(np.zeros((8, 8), dtype=np.uint8)).save(
                d / "img.png")
        manifest = scan_dataset_dir(str(tmp_path))
        assert sorted(manifest.class_counts()) == sorted(CLASS_NAMES)
        assert all(count == 1 for count in manifest.class_counts().values())

    def test_unrecognized_dir_skipped(self, dataset_root, tmp_path, caplog):
        import shutil

        root = tmp_path / "root"
        shutil.copytree(dataset_root, root)
        (root / "THUMBNAILS").mkdir()
        manifest = scan_dataset_dir(str(root))
        assert len(manifest.entries) == 32

    def test_missing_class_dir(self, tmp_path):
        (tmp_path / "AMD").mkdir()
        with pytest.raises(MissingClassDir):
            scan_dataset_dir(str(tmp_path))

    def test_missing_root(self, tmp_path):
        with pytest.raises(MissingClassDir):
            scan_dataset_dir(str(tmp_path / "nope"))

    def test_empty_dataset(self, tmp_path):
        for name in CLASS_NAMES:
            (tmp_path / name).mkdir()
        with pytest.raises(EmptyDataset):
            scan_dataset_dir(str(tmp_path))

    def test_non_image_files_ignored(self, tmp_path):
        for name in CLASS_NAMES:
            d = tmp_path / name
            d.mkdir()
            (d / "notes.txt").write_text("x")
            Image.fromarray(np.zeros((8, 8), dtype=np.uint8)).save(
                d / "img.png")
        manifest = scan_dataset_dir(str(tmp_path))
        assert len(manifest.entries) == 8


class TestDecode:
    def test_grayscale_replicated(self):
        arr = np.full((50, 40), 100, dtype=np.uint8)
        img = decode_image(png_bytes(arr))
        assert img.pixels.shape == (IMAGE_SIZE, IMAGE_SIZE, 3)
        assert img.pixels.dtype == np.float32
        # all three channels identical after replication
        assert np.array_equal(img.pixels[:, :, 0], img.pixels[:, :, 1])
        assert np.array_equal(img.pixels[:, :, 0], img.pixels[:, :, 2])
        # constant image survives resize exactly
        assert np.allclose(img.pixels, 100.0 / 255.0, atol=1e-6)
        assert img.original_size == (40, 50)

    def test_rgb_scaling(self):
        arr = np.zeros((30, 30, 3), dtype=np.uint8)
        arr[:, :, 0] = 255
        img = decode_image(png_bytes(arr))
        assert np.allclose(img.pixels[:, :, 0], 1.0)
        assert np.allclose(img.pixels[:, :, 1], 0.0)

    def test_sixteen_bit_scaling(self):
        arr = np.full((20, 20), 65535, dtype=np.uint16)
        data = png_bytes(arr)
        img = decode_image(data)
        assert np.allclose(img.pixels, 1.0, atol=1e-6)
        mid = np.full((20, 20), 32768, dtype=np.uint16)
        img2 = decode_image(png_bytes(mid))
        assert np.allclose(img2.pixels, 32768.0 / 65535.0, atol=1e-4)

    def test_palette_converted(self):
        arr = np.zeros((16, 16), dtype=np.uint8)
        im = Image.fromarray(arr).convert("P")
        buf = io.BytesIO()
        im.save(buf, format="PNG")
        img = decode_image(buf.getvalue())
        assert img.pixels.shape == (IMAGE_SIZE, IMAGE_SIZE, 3)

    def test_values_in_range(self):
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        img = decode_image(png_bytes(arr))
        assert img.pixels.min() >= 0.0
        assert img.pixels.max() <= 1.0
        assert np.isfinite(img.pixels).all()

    def test_garbage_bytes(self):
        with pytest.raises(DecodeError):
            decode_image(b"definitely not an image")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DecodeError):
            load_image(str(tmp_path / "missing.png"))


class TestSplits:
    def manifest(self, per_class):
        entries = [
            ManifestEntry(f"{name}/{i}.png", name)
            for name in CLASS_NAMES
            for i in range(per_class)
        ]
        return DatasetManifest(entries=entries)

    def test_bad_fractions(self):
        m = self.manifest(4)
        with pytest.raises(InvalidFractions):
            make_splits(m, (0.5, 0.2, 0.2), seed=0)
        with pytest.raises(InvalidFractions):
            make_splits(m, (0.8, 0.2, 0.0), seed=0)
        with pytest.raises(InvalidFractions):
            make_splits(m, (1.2, -0.1, -0.1), seed=0)

    def test_exact_stratified_counts(self):
        m = self.manifest(100)
        split = make_splits(m, (0.7, 0.15, 0.15), seed=1)
        for name in CLASS_NAMES:
            per_split = {"train": 0, "val": 0, "test": 0}
            for e in split.entries:
                if e.class_name == name:
                    per_split[e.split] += 1
            assert per_split == {"train": 70, "val": 15, "test": 15}

    def test_every_entry_assigned_once(self):
        split = make_splits(self.manifest(7), (0.6, 0.2, 0.2), seed=2)
        assert all(e.split in ("train", "val", "test") for e in split.entries)
        total = sum(len(split.split_entries(s)) for s in ("train", "val", "test"))
        assert total == len(split.entries)

    def test_small_class_populates_all_splits(self):
        split = make_splits(self.manifest(3), (0.7, 0.15, 0.15), seed=0)
        for s in ("train", "val", "test"):
            per_class = {}
            for e in split.split_entries(s):
                per_class[e.class_name] = per_class.get(e.class_name, 0) + 1
            assert all(per_class.get(name, 0) == 1 for name in CLASS_NAMES)

    def test_deterministic(self):
        m = self.manifest(10)
        a = make_splits(m, (0.7, 0.15, 0.15), seed=9)
        b = make_splits(m, (0.7, 0.15, 0.15), seed=9)
        assert [e.split for e in a.entries] == [e.split for e in b.entries]

    def test_seed_changes_assignment(self):
        m = self.manifest(10)
        a = make_splits(m, (0.7, 0.15, 0.15), seed=1)
        b = make_splits(m, (0.7, 0.15, 0.15), seed=2)
        assert [e.split for e in a.entries] != [e.split for e in b.entries]

    def test_json_round_trip(self, split_manifest):
        clone = DatasetManifest.from_json(split_manifest.to_json())
        assert clone.classes == split_manifest.classes
        assert clone.seed == split_manifest.seed
        assert [(e.path, e.class_name, e.split) for e in clone.entries] == [
            (e.path, e.class_name, e.split) for e in split_manifest.entries
        ]


class TestBatches:
    def test_one_hot(self):
        out = one_hot(np.array([0, 3, 7]), num_classes=8)
        assert out.shape == (3, 8)
        assert np.array_equal(out.sum(axis=1), np.ones(3))
        assert out[1, 3] == 1.0

    def test_covers_split_once(self, split_manifest):
        n = len(split_manifest.split_entries("train"))
        seen = 0
        last_sizes = []
        for batch in batch_iterator(split_manifest, "train", batch_size=5,
                                    shuffle_seed=0):
            assert batch.images.shape[1:] == (224, 224, 3)
            assert np.allclose(batch.labels.sum(axis=1), 1.0)
            seen += len(batch.images)
            last_sizes.append(len(batch.images))
        assert seen == n
        # final batch may be short, never empty
        assert all(s > 0 for s in last_sizes)
        assert last_sizes[-1] == n - 5 * (len(last_sizes) - 1)

    def test_epoch_changes_order(self, split_manifest):
        def order(epoch):
            labels = []
            for batch in batch_iterator(split_manifest, "train", 4,
                                        shuffle_seed=7, epoch=epoch):
                labels.extend(batch.labels.argmax(axis=1).tolist())
            return labels

        assert order(0) == order(0)
        assert order(0) != order(1)

    def test_no_shuffle_preserves_order(self, split_manifest):
        expected = [e.class_name for e in split_manifest.split_entries("val")]
        got = []
        for batch in batch_iterator(split_manifest, "val", 3, shuffle_seed=0,
                                    shuffle=False):
            got.extend(
                split_manifest.classes[i] for i in batch.labels.argmax(axis=1)
            )
        assert got == expected

    def test_empty_split(self, dataset_root):
        manifest = scan_dataset_dir(dataset_root)  # no splits assigned
        with pytest.raises(EmptySplit):
            next(batch_iterator(manifest, "train", 4, shuffle_seed=0))
