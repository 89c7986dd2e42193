"""Synthetic 8-class image dataset for desk-scale training and smoke tests.

Each class gets a visually distinct texture: a sinusoidal grating with a
class-specific orientation and frequency, on a class-specific base brightness,
plus mild pixel noise. Patterns are separable enough for a small CNN to learn
within a few epochs on CPU.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .labels import CLASS_NAMES

DEFAULT_SIZE = 224


def synthetic_class_image(
    class_index: int, rng: np.random.Generator, size: int = DEFAULT_SIZE
) -> np.ndarray:
    """One grayscale uint8 image following class_index's pattern."""
    theta = class_index * np.pi / 8.0
    freq = 4.0 + 2.0 * class_index  # cycles per image width
    base = 0.34 + 0.045 * class_index
    phase = rng.uniform(0.0, 2.0 * np.pi)

    ys, xs = np.mgrid[0:size, 0:size].astype(np.float32)
    coord = (xs * np.cos(theta) + ys * np.sin(theta)) / size
    img = base + 0.22 * np.sin(2.0 * np.pi * freq * coord + phase)
    img += rng.normal(0.0, 0.02, size=img.shape)
    img = np.clip(img, 0.0, 1.0)
    return (img * 255.0).round().astype(np.uint8)


def generate_synthetic_dataset(
    root: str, per_class: int, seed: int = 0, size: int = DEFAULT_SIZE
) -> str:
    """Write per_class PNGs for each of the 8 classes under root.

    Returns root, laid out as <root>/<ClassName>/<index>.png so it can be
    scanned like a real dataset.
    """
    rng = np.random.default_rng(seed)
    for k, name in enumerate(CLASS_NAMES):
        class_dir = os.path.join(root, name)
        os.makedirs(class_dir, exist_ok=True)
        for i in range(per_class):
            img = synthetic_class_image(k, rng, size=size)
            Image.fromarray(img, mode="L").save(
                os.path.join(class_dir, f"{name.lower()}_{i:04d}.png")
            )
    return root
