"""Saliency map container and the shared normalization convention."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..labels import ClassLabel

METHODS = ("gradcam", "lime", "occlusion")


@dataclass
class SaliencyMap:
    """values: HxW floats in [0, 1]. A constant raw map normalizes to all-zero."""

    values: np.ndarray
    method: str
    target_class: ClassLabel


def normalize_map(raw: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; constant input maps to all zeros."""
    raw = np.asarray(raw, dtype=np.float64)
    lo = float(raw.min())
    hi = float(raw.max())
    if hi == lo:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)
