"""LIME on a deterministic superpixel grid: binary masks, proximity-weighted
ridge regression, per-segment weights painted back as a saliency map."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import Ridge

from ..data import IMAGE_SIZE
from ..errors import DegenerateSampling, InvalidConfig, InvalidSegmentCount
from ..labels import ClassLabel
from ..models import ModelHandle
from .saliency import SaliencyMap, normalize_map

logger = logging.getLogger(__name__)

BASELINES = ("mean_color", "gray")


@dataclass
class LimeConfig:
    num_superpixels: int = 49
    num_samples: int = 1000
    kernel_width: float = 0.25
    ridge_penalty: float = 1.0
    baseline: str = "mean_color"
    keep_probability: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < self.num_superpixels:
            raise InvalidConfig(
                f"num_samples ({self.num_samples}) must be >= "
                f"num_superpixels ({self.num_superpixels})"
            )
        if self.kernel_width <= 0:
            raise InvalidConfig(f"kernel_width must be > 0, got {self.kernel_width}")
        if self.ridge_penalty < 0:
            raise InvalidConfig(f"ridge_penalty must be >= 0, got {self.ridge_penalty}")
        if self.baseline not in BASELINES:
            raise InvalidConfig(f"baseline must be one of {BASELINES}, got {self.baseline!r}")
        if not 0.0 < self.keep_probability <= 1.0:
            raise InvalidConfig(
                f"keep_probability must be in (0, 1], got {self.keep_probability}"
            )


def superpixel_segment(image: np.ndarray, num_superpixels: int) -> np.ndarray:
    """Tile the image into a sqrt(n) x sqrt(n) grid of equal cells.

    Deterministic by construction so regression oracles are exact. A
    content-aware segmenter can be passed to lime_explain instead.
    """
    if num_superpixels < 1 or math.isqrt(num_superpixels) ** 2 != num_superpixels:
        raise InvalidSegmentCount(
            f"num_superpixels must be a positive perfect square, got {num_superpixels}"
        )
    side = math.isqrt(num_superpixels)
    h, w = image.shape[0], image.shape[1]
    row_cell = np.arange(h) * side // h
    col_cell = np.arange(w) * side // w
    return (row_cell[:, None] * side + col_cell[None, :]).astype(np.int64)


def _baseline_fill(image: np.ndarray, kind: str) -> np.ndarray:
    if kind == "gray":
        return np.full((1, 1, image.shape[2]), 0.5, dtype=image.dtype)
    return image.mean(axis=(0, 1), keepdims=True).astype(image.dtype)


def lime_explain(
    model: ModelHandle,
    image: np.ndarray,
    class_idx: int,
    config: LimeConfig | None = None,
    segments: np.ndarray | None = None,
    masks: np.ndarray | None = None,
    batch_size: int = 32,
) -> tuple[np.ndarray, SaliencyMap]:
    """Fit a locally weighted linear surrogate over superpixel on/off masks.

    Returns the per-segment weight vector (signed) and a saliency map where
    negative weights clamp to zero before min-max normalization.

    segments: optional precomputed label map (pluggable segmenter output).
    masks: optional explicit mask matrix, used by exact-enumeration oracles.
    """
    config = config or LimeConfig()
    if segments is None:
        segments = superpixel_segment(image, config.num_superpixels)
    n = int(segments.max()) + 1

    if masks is None:
        rng = np.random.default_rng(config.seed)
        masks = rng.random((config.num_samples, n)) < config.keep_probability
        masks[0] = True  # the unperturbed image is always in the sample set
    masks = np.asarray(masks, dtype=bool)
    if all(np.array_equal(masks[0], m) for m in masks[1:]):
        raise DegenerateSampling("all sampled masks are identical; cannot fit")

    fill = _baseline_fill(image, config.baseline)
    y = np.empty(len(masks), dtype=np.float64)
    for start in range(0, len(masks), batch_size):
        chunk = masks[start:start + batch_size]
        batch = np.empty((len(chunk),) + image.shape, dtype=np.float32)
        for j, mask in enumerate(chunk):
            off = ~mask[segments]
            perturbed = image.copy()
            perturbed[off] = fill
            batch[j] = perturbed
        y[start:start + len(chunk)] = model.forward(batch)[:, class_idx]

    frac_on = masks.mean(axis=1)
    pi = np.exp(-((1.0 - frac_on) ** 2) / config.kernel_width**2)

    ridge = Ridge(alpha=config.ridge_penalty, fit_intercept=True)
    ridge.fit(masks.astype(np.float64), y, sample_weight=pi)
    weights = np.asarray(ridge.coef_, dtype=np.float64)

    values = normalize_map(np.maximum(weights[segments], 0.0))
    label = ClassLabel(class_idx, model.class_order[class_idx])
    return weights, SaliencyMap(values, "lime", label)
