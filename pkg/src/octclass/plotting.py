"""Training-curve and confusion-matrix rasters."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import ConfusionMatrix
from .training import EpochRecord


def plot_curves(records: list[EpochRecord], out_dir: str, prefix: str = "model") -> list[str]:
    """Write accuracy and loss curves over epochs; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    epochs = [r.epoch for r in records]
    paths = []
    panels = [
        ("accuracy", [r.train_acc for r in records], [r.val_acc for r in records]),
        ("loss", [r.train_loss for r in records], [r.val_loss for r in records]),
    ]
    for name, train_vals, val_vals in panels:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(epochs, train_vals, label=f"train {name}")
        ax.plot(epochs, val_vals, label=f"val {name}")
        ax.set_xlabel("epoch")
        ax.set_ylabel(name)
        ax.set_title(f"{prefix}: {name} over epochs")
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, f"{prefix}_{name}.png")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        paths.append(path)
    return paths


def plot_confusion(cm: ConfusionMatrix, class_names, path: str) -> str:
    counts = np.asarray(cm.counts)
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(len(class_names)), class_names, rotation=45, ha="right")
    ax.set_yticks(range(len(class_names)), class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    threshold = counts.max() / 2 if counts.max() else 0
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            color = "white" if counts[i, j] > threshold else "black"
            ax.text(j, i, str(int(counts[i, j])), ha="center", va="center",
                    color=color, fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
