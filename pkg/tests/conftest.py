"""Shared fixtures: a small on-disk dataset, toy models, and a checkpoint."""

import numpy as np
import pytest

from octclass.data import make_splits, scan_dataset_dir
from octclass.models import ModelConfig, build_model, save_checkpoint
from octclass.synthetic import generate_synthetic_dataset


@pytest.fixture(scope="session")
def dataset_root(tmp_path_factory):
    """8 classes x 4 images, written as 64px PNGs (loader resizes to 224)."""
    root = tmp_path_factory.mktemp("dataset")
    generate_synthetic_dataset(str(root), per_class=4, seed=11, size=64)
    return str(root)


@pytest.fixture(scope="session")
def split_manifest(dataset_root):
    manifest = scan_dataset_dir(dataset_root)
    return make_splits(manifest, (0.5, 0.25, 0.25), seed=3)


@pytest.fixture(scope="session")
def tiny_handle():
    """Full-size-input tiny model for pipeline and service tests."""
    return build_model(ModelConfig(architecture="tiny_cnn", width_multiplier=0.5,
                                   num_classes=8, rng_seed=5))


@pytest.fixture(scope="session")
def toy_handle():
    """Small-input tiny model for fast explanation tests."""
    return build_model(ModelConfig(architecture="tiny_cnn", width_multiplier=0.5,
                                   num_classes=4, input_shape=(64, 64, 3),
                                   rng_seed=2))


@pytest.fixture(scope="session")
def checkpoint_path(tmp_path_factory, tiny_handle):
    path = tmp_path_factory.mktemp("ckpt") / "model.oct"
    save_checkpoint(tiny_handle, str(path))
    return str(path)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


def small_batch(rng, n=6, size=16, num_classes=4):
    """Random image batch with one-hot labels."""
    from octclass.data import Batch

    images = rng.random((n, size, size, 3), dtype=np.float32)
    labels = np.zeros((n, num_classes), dtype=np.float32)
    labels[np.arange(n), rng.integers(0, num_classes, size=n)] = 1.0
    return Batch(images=images, labels=labels)
