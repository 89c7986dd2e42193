"""Model construction and the handle wrapping forward passes and taps.

Every architecture is expressed as an ordered sequence of named stages; a
stage's output is either a spatial feature map (4D) or the final logits.
Stage boundaries are the only places activations can be tapped, which keeps
saliency code and gradient checks independent of block internals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..errors import InvalidConfig, ShapeMismatch, UnknownLayer
from ..labels import generic_class_names

ARCHITECTURES = ("xception_style", "inceptionv3_style", "tiny_cnn")

MIN_CHANNELS = 8


def scaled_channels(base: int, width: float) -> int:
    """Scale a channel count by the width multiplier, floored at 8."""
    return max(MIN_CHANNELS, int(round(base * width)))


@dataclass
class ModelConfig:
    architecture: str = "tiny_cnn"
    width_multiplier: float = 1.0
    num_classes: int = 8
    input_shape: tuple[int, int, int] = (224, 224, 3)
    rng_seed: int = 0

    def __post_init__(self):
        self.input_shape = tuple(self.input_shape)
        if self.architecture not in ARCHITECTURES:
            raise InvalidConfig(f"unknown architecture: {self.architecture!r}")
        if not 0.0 < self.width_multiplier <= 1.0:
            raise InvalidConfig(
                f"width_multiplier must be in (0,1]: {self.width_multiplier}"
            )
        if self.num_classes < 2:
            raise InvalidConfig(f"num_classes must be >= 2: {self.num_classes}")
        if len(self.input_shape) != 3 or self.input_shape[2] != 3:
            raise InvalidConfig(f"input_shape must be (H, W, 3): {self.input_shape}")

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "width_multiplier": self.width_multiplier,
            "num_classes": self.num_classes,
            "input_shape": list(self.input_shape),
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            architecture=d["architecture"],
            width_multiplier=d["width_multiplier"],
            num_classes=d["num_classes"],
            input_shape=tuple(d["input_shape"]),
            rng_seed=d["rng_seed"],
        )


@dataclass
class ActivationTap:
    layer_name: str
    activation: np.ndarray  # H' x W' x K float32


class StagedNetwork(nn.Module):
    """Sequential pipeline of named stages; full forward returns logits."""

    def __init__(self, stages: list[tuple[str, nn.Module]]):
        super().__init__()
        self.stage_names = [name for name, _ in stages]
        self.stages = nn.ModuleDict(dict(stages))

    def forward(self, x):
        for name in self.stage_names:
            x = self.stages[name](x)
        return x

    def forward_collect(self, x, taps: set[str]):
        """Forward pass collecting the outputs of the named stages."""
        captured = {}
        for name in self.stage_names:
            x = self.stages[name](x)
            if name in taps:
                captured[name] = x
        return x, captured

    def forward_to(self, layer_name: str, x):
        """Run stages up to and including layer_name."""
        idx = self.stage_names.index(layer_name)
        for name in self.stage_names[:idx + 1]:
            x = self.stages[name](x)
        return x

    def forward_from(self, layer_name: str, activation):
        """Run the stages after layer_name on a given activation."""
        idx = self.stage_names.index(layer_name)
        x = activation
        for name in self.stage_names[idx + 1:]:
            x = self.stages[name](x)
        return x


class ModelHandle:
    """Loaded network: forward pass, activation taps, parameter access.

    Immutable in inference mode; training mutates parameters through
    .network and requires exclusive access.
    """

    def __init__(self, config: ModelConfig, network: StagedNetwork,
                 class_order: tuple[str, ...] | None = None):
        self.config = config
        self.network = network
        self.class_order = tuple(class_order or generic_class_names(config.num_classes))
        if len(self.class_order) != config.num_classes:
            raise InvalidConfig(
                f"class_order has {len(self.class_order)} names for "
                f"{config.num_classes} classes"
            )
        self.layer_shapes = self._probe_shapes()
        # tappable layers: stages producing spatial feature maps
        self.layer_names = [
            name for name in self.network.stage_names
            if len(self.layer_shapes[name]) == 4
        ]

    def _probe_shapes(self) -> dict[str, tuple[int, ...]]:
        h, w, c = self.config.input_shape
        self.network.eval()
        shapes = {}
        with torch.no_grad():
            x = torch.zeros(1, c, h, w)
            for name in self.network.stage_names:
                x = self.network.stages[name](x)
                shapes[name] = tuple(x.shape)
        return shapes

    @property
    def default_gradcam_layer(self) -> str:
        """Deepest spatial feature map, standard saliency target."""
        return self.layer_names[-1]

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.network.parameters())

    def to_nchw(self, images: np.ndarray) -> torch.Tensor:
        return torch.from_numpy(
            np.ascontiguousarray(images.transpose(0, 3, 1, 2), dtype=np.float32)
        )

    def _check_batch_shape(self, arr: np.ndarray) -> None:
        if arr.ndim != 4 or tuple(arr.shape[1:]) != self.config.input_shape:
            raise ShapeMismatch(
                f"expected N x {self.config.input_shape}, got {arr.shape}"
            )

    def forward(self, images: np.ndarray) -> np.ndarray:
        """Batch of N x H x W x 3 images to N x num_classes probabilities."""
        arr = np.asarray(images, dtype=np.float32)
        self._check_batch_shape(arr)
        self.network.eval()
        with torch.no_grad():
            logits = self.network(self.to_nchw(arr))
            probs = torch.softmax(logits, dim=1)
        return probs.numpy()

    def forward_with_activations(
        self, image: np.ndarray, tap_layers: list[str]
    ) -> tuple[np.ndarray, list[ActivationTap]]:
        """Single-image forward that also captures the named stage outputs."""
        arr = np.asarray(image, dtype=np.float32)
        if tuple(arr.shape) != self.config.input_shape:
            raise ShapeMismatch(
                f"expected {self.config.input_shape}, got {arr.shape}"
            )
        unknown = [n for n in tap_layers if n not in self.layer_names]
        if unknown:
            raise UnknownLayer(f"not tappable layers: {unknown}")
        self.network.eval()
        with torch.no_grad():
            logits, captured = self.network.forward_collect(
                self.to_nchw(arr[None]), set(tap_layers)
            )
            probs = torch.softmax(logits, dim=1)[0].numpy()
        taps = [
            ActivationTap(name, captured[name][0].permute(1, 2, 0).numpy())
            for name in tap_layers
        ]
        return probs, taps

    def float_state_arrays(self) -> dict[str, np.ndarray]:
        """Named float parameters and buffers, in state-dict order.

        Integer bookkeeping buffers (batch-norm step counters) are excluded;
        they do not affect the forward pass.
        """
        out = {}
        for name, tensor in self.network.state_dict().items():
            if tensor.is_floating_point():
                out[name] = tensor.detach().cpu().numpy().astype(np.float32)
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        expected = set(self.float_state_arrays().keys())
        given = set(arrays.keys())
        if expected != given:
            missing = sorted(expected - given)
            extra = sorted(given - expected)
            raise ShapeMismatch(
                f"state arrays do not match model: missing={missing}, extra={extra}"
            )
        state = {k: torch.from_numpy(np.ascontiguousarray(v)) for k, v in arrays.items()}
        self.network.load_state_dict(state, strict=False)


def build_model(config: ModelConfig) -> ModelHandle:
    """Construct a model with deterministic initialization from rng_seed."""
    from .inception import inception_stages
    from .tiny import tiny_cnn_stages
    from .xception import xception_stages

    torch.manual_seed(config.rng_seed)
    if config.architecture == "tiny_cnn":
        stages = tiny_cnn_stages(config.width_multiplier, config.num_classes)
    elif config.architecture == "xception_style":
        stages = xception_stages(config.width_multiplier, config.num_classes)
    else:
        stages = inception_stages(config.width_multiplier, config.num_classes)
    network = StagedNetwork(stages)
    network.eval()
    return ModelHandle(config, network)
