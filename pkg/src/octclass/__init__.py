"""Retinal OCT disease classification: data pipeline, batch-mixing
augmentation, CNN model zoo, training, evaluation reports, visual
explanations, and an HTTP serving layer."""

from .labels import CLASS_NAMES, NUM_CLASSES, ClassLabel

__version__ = "0.1.0"

__all__ = ["CLASS_NAMES", "NUM_CLASSES", "ClassLabel", "__version__"]
