"""Explanation methods: Grad-CAM, LIME, and occlusion sensitivity, plus the
shared dispatch used by the CLI and the serving API."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig, UnknownMethod
from ..models import ModelHandle
from .gradcam import grad_cam
from .lime import BASELINES, LimeConfig, lime_explain, superpixel_segment
from .occlusion import OcclusionConfig, occlusion_positions, occlusion_sensitivity
from .overlay import (
    colorize,
    grayscale,
    render_overlay,
    save_image,
    three_panel_figure,
    to_uint8,
)
from .saliency import METHODS, SaliencyMap, normalize_map

__all__ = [
    "METHODS",
    "BASELINES",
    "SaliencyMap",
    "LimeConfig",
    "OcclusionConfig",
    "ExplanationResult",
    "grad_cam",
    "lime_explain",
    "superpixel_segment",
    "occlusion_sensitivity",
    "occlusion_positions",
    "render_overlay",
    "three_panel_figure",
    "grayscale",
    "colorize",
    "to_uint8",
    "save_image",
    "normalize_map",
    "explain",
]


@dataclass
class ExplanationResult:
    map: SaliencyMap
    overlay: np.ndarray
    params: dict
    class_probability: float


def _build_config(cls, params: dict):
    try:
        return cls(**params)
    except TypeError as exc:
        raise InvalidConfig(f"bad {cls.__name__} parameters: {exc}") from exc


def explain(
    model: ModelHandle,
    image: np.ndarray,
    class_idx: int,
    method: str,
    params: dict | None = None,
    alpha: float = 0.4,
) -> ExplanationResult:
    """Run one explanation method and render its overlay.

    params override the method's config defaults; unknown keys are rejected.
    """
    params = dict(params or {})
    if method == "gradcam":
        layer = params.pop("layer", None)
        if params:
            raise InvalidConfig(f"unknown gradcam parameters: {sorted(params)}")
        smap = grad_cam(model, image, class_idx, layer=layer)
        echo = {"layer": layer or model.default_gradcam_layer}
    elif method == "lime":
        config = _build_config(LimeConfig, params)
        _, smap = lime_explain(model, image, class_idx, config)
        echo = config.__dict__.copy()
    elif method == "occlusion":
        config = _build_config(OcclusionConfig, params)
        smap = occlusion_sensitivity(model, image, class_idx, config)
        echo = config.__dict__.copy()
    else:
        raise UnknownMethod(f"unknown explanation method: {method!r}")

    overlay = render_overlay(image, smap, alpha=alpha)
    prob = float(model.forward(image[None])[0, class_idx])
    return ExplanationResult(smap, overlay, echo, prob)
