"""Grad-CAM: channel-weighted activation maps from pre-softmax gradients."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import IndexOutOfRange, NonSpatialLayer, UnknownLayer
from ..labels import ClassLabel
from ..models import ModelHandle
from .saliency import SaliencyMap, normalize_map


def grad_cam(
    model: ModelHandle,
    image: np.ndarray,
    class_idx: int,
    layer: str | None = None,
) -> SaliencyMap:
    """Weight each feature channel by the spatial mean of the gradient of the
    pre-softmax class score, rectify the weighted sum, upsample, and min-max
    normalize. The pre-softmax score is differentiated, not the probability."""
    if layer is None:
        layer = model.default_gradcam_layer
    if layer not in model.network.stage_names:
        raise UnknownLayer(f"unknown layer {layer!r}; taps: {model.layer_names}")
    if not 0 <= class_idx < model.config.num_classes:
        raise IndexOutOfRange(f"class_idx {class_idx} out of range")

    net = model.network
    net.eval()
    dtype = next(net.parameters()).dtype
    x = torch.from_numpy(np.transpose(image, (2, 0, 1))[None].copy()).to(dtype)

    with torch.enable_grad():
        acts = net.forward_to(layer, x)
        if acts.ndim != 4 or acts.shape[2] < 2 or acts.shape[3] < 2:
            raise NonSpatialLayer(
                f"layer {layer!r} output shape {tuple(acts.shape)} has no 2x2+ spatial extent"
            )
        acts = acts.detach().requires_grad_(True)
        logits = net.forward_from(layer, acts)
        # grad w.r.t. the tap only; model parameter .grad stays untouched
        (grads,) = torch.autograd.grad(logits[0, class_idx], acts)

    alpha = grads.mean(dim=(2, 3))                       # 1 x K
    weighted = (alpha[:, :, None, None] * acts.detach()).sum(dim=1)
    raw = torch.relu(weighted)                           # 1 x H' x W'
    h, w = model.config.input_shape[0], model.config.input_shape[1]
    up = F.interpolate(
        raw.unsqueeze(1), size=(h, w),
        mode="bilinear", align_corners=False,
    )
    values = normalize_map(up[0, 0].numpy())
    label = ClassLabel(class_idx, model.class_order[class_idx])
    return SaliencyMap(values, "gradcam", label)
