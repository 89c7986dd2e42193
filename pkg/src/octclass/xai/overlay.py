"""Heatmap overlay rendering and the three-panel explanation figure."""

from __future__ import annotations

import numpy as np
from matplotlib import colormaps

from ..errors import InvalidConfig
from .saliency import SaliencyMap


def grayscale(image: np.ndarray) -> np.ndarray:
    """Channel-mean luminance replicated to 3 channels. Input scans are
    replicated grayscale already, so this is lossless for them."""
    gray = image.mean(axis=2)
    return np.repeat(gray[:, :, None], 3, axis=2)


def colorize(values: np.ndarray, colormap: str = "jet") -> np.ndarray:
    rgba = colormaps[colormap](np.clip(values, 0.0, 1.0))
    return rgba[..., :3].astype(np.float64)


def render_overlay(
    image: np.ndarray,
    smap: SaliencyMap,
    colormap: str = "jet",
    alpha: float = 0.4,
) -> np.ndarray:
    """(1-alpha) * grayscale(image) + alpha * colormap(map), clipped to [0, 1]."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidConfig(f"alpha must be in [0, 1], got {alpha}")
    gray = grayscale(image)
    heat = colorize(smap.values, colormap)
    return np.clip((1.0 - alpha) * gray + alpha * heat, 0.0, 1.0)


def three_panel_figure(
    image: np.ndarray,
    smap: SaliencyMap,
    overlay: np.ndarray,
    gap: int = 8,
) -> np.ndarray:
    """original | colorized map | overlay, side by side on a white ground."""
    heat = colorize(smap.values)
    spacer = np.ones((image.shape[0], gap, 3), dtype=np.float64)
    return np.concatenate(
        [image.astype(np.float64), spacer, heat, spacer, overlay], axis=1
    )


def to_uint8(image: np.ndarray) -> np.ndarray:
    return (np.clip(image, 0.0, 1.0) * 255.0).round().astype(np.uint8)


def save_image(image: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(to_uint8(image)).save(path)
