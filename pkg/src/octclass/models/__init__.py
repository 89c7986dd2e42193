from .base import (
    ARCHITECTURES,
    ActivationTap,
    ModelConfig,
    ModelHandle,
    StagedNetwork,
    build_model,
    scaled_channels,
)
from .checkpoint import checkpoint_digest, load_checkpoint, save_checkpoint

__all__ = [
    "ARCHITECTURES",
    "ActivationTap",
    "ModelConfig",
    "ModelHandle",
    "StagedNetwork",
    "build_model",
    "scaled_channels",
    "checkpoint_digest",
    "load_checkpoint",
    "save_checkpoint",
]
