"""Canonical disease classes and label encoding.

The class ordering is alphabetical and fixed for the lifetime of any trained
model: checkpoints, reports, and the serving API all index classes this way.
"""

from dataclasses import dataclass

CLASS_NAMES = ("AMD", "CNV", "CSR", "DME", "DR", "DRUSEN", "MH", "NORMAL")
NUM_CLASSES = len(CLASS_NAMES)

_NAME_TO_INDEX = {name: i for i, name in enumerate(CLASS_NAMES)}


@dataclass(frozen=True)
class ClassLabel:
    index: int
    name: str


def label_for_index(index: int) -> ClassLabel:
    if not 0 <= index < NUM_CLASSES:
        raise ValueError(f"class index out of range: {index}")
    return ClassLabel(index, CLASS_NAMES[index])


def label_for_name(name: str) -> ClassLabel:
    """Look up a label case-insensitively."""
    idx = _NAME_TO_INDEX.get(name.upper())
    if idx is None:
        raise ValueError(f"unknown class name: {name!r}")
    return ClassLabel(idx, CLASS_NAMES[idx])


def class_index(name: str) -> int:
    return label_for_name(name).index


def generic_class_names(num_classes: int) -> tuple[str, ...]:
    """Class names for non-standard head sizes (toy/test models)."""
    if num_classes == NUM_CLASSES:
        return CLASS_NAMES
    return tuple(f"class_{i}" for i in range(num_classes))
