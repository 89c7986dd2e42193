"""Occlusion sensitivity: slide a baseline patch over the image and
accumulate the class-probability drop into the occluded region."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig
from ..labels import ClassLabel
from ..models import ModelHandle
from .saliency import SaliencyMap, normalize_map


@dataclass
class OcclusionConfig:
    patch_size: int = 32
    stride: int = 16
    baseline_value: float = 0.5

    def __post_init__(self):
        if not 1 <= self.stride <= self.patch_size <= 224:
            raise InvalidConfig(
                f"need 1 <= stride <= patch_size <= 224, got "
                f"stride={self.stride} patch_size={self.patch_size}"
            )
        if not 0.0 <= self.baseline_value <= 1.0:
            raise InvalidConfig(
                f"baseline_value must be in [0, 1], got {self.baseline_value}"
            )


def occlusion_positions(size: int, patch_size: int, stride: int) -> list[int]:
    return list(range(0, size - patch_size + 1, stride))


def occlusion_sensitivity(
    model: ModelHandle,
    image: np.ndarray,
    class_idx: int,
    config: OcclusionConfig | None = None,
) -> SaliencyMap:
    """Probability drop per occluded patch, averaged over overlap counts.

    Each position is forwarded as its own single-image batch so the map is
    bitwise reproducible against a naive per-position loop (batched conv can
    reorder float reductions).
    """
    config = config or OcclusionConfig()
    h, w = image.shape[0], image.shape[1]
    p_orig = float(model.forward(image[None])[0, class_idx])

    acc = np.zeros((h, w), dtype=np.float64)
    cnt = np.zeros((h, w), dtype=np.int64)
    ps = config.patch_size
    for y0 in occlusion_positions(h, ps, config.stride):
        for x0 in occlusion_positions(w, ps, config.stride):
            occluded = image.copy()
            occluded[y0:y0 + ps, x0:x0 + ps, :] = config.baseline_value
            p = float(model.forward(occluded[None])[0, class_idx])
            acc[y0:y0 + ps, x0:x0 + ps] += p_orig - p
            cnt[y0:y0 + ps, x0:x0 + ps] += 1

    raw = np.divide(acc, cnt, out=np.zeros_like(acc), where=cnt > 0)
    raw = np.maximum(raw, 0.0)
    values = normalize_map(raw)
    label = ClassLabel(class_idx, model.class_order[class_idx])
    return SaliencyMap(values, "occlusion", label)
