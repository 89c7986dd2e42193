"""CutMix and MixUp batch transforms with exact soft-label bookkeeping.

Both transforms pair every example with a partner drawn from a random
permutation of the batch. MixUp blends pixels and labels with a
Beta(alpha, alpha) coefficient; CutMix pastes a rectangular region from the
partner and mixes labels by the exact pasted-area fraction, computed after
the box is clipped to the image bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Batch
from .errors import InvalidAlpha


@dataclass
class MixParams:
    alpha_mixup: float = 0.2
    alpha_cutmix: float = 1.0
    apply_probability: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.alpha_mixup <= 0 or self.alpha_cutmix <= 0:
            raise InvalidAlpha(
                f"alphas must be positive: mixup={self.alpha_mixup}, "
                f"cutmix={self.alpha_cutmix}"
            )
        if not 0.0 <= self.apply_probability <= 1.0:
            raise ValueError(
                f"apply_probability must be in [0,1]: {self.apply_probability}"
            )


@dataclass
class CutMixBox:
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass
class MixProvenance:
    partner_index: int
    lam: float
    method: str  # "mixup" | "cutmix" | "none"


@dataclass
class MixedBatch:
    images: np.ndarray
    labels: np.ndarray
    provenance: list[MixProvenance]
    box: CutMixBox | None = None


def sample_lambda(alpha: float, rng: np.random.Generator) -> float:
    """Draw a mixing coefficient from Beta(alpha, alpha)."""
    if alpha <= 0:
        raise InvalidAlpha(f"alpha must be positive: {alpha}")
    return float(rng.beta(alpha, alpha))


def _identity(batch: Batch) -> MixedBatch:
    prov = [MixProvenance(i, 1.0, "none") for i in range(len(batch.images))]
    return MixedBatch(batch.images.copy(), batch.labels.copy(), prov)


def _check_labels(labels: np.ndarray) -> None:
    sums = labels.sum(axis=1)
    if not np.allclose(sums, 1.0, atol=1e-6):
        raise ValueError("batch labels must be one-hot (rows summing to 1)")


def _mixup_core(batch: Batch, lam: float, perm: np.ndarray) -> MixedBatch:
    images = lam * batch.images + (1.0 - lam) * batch.images[perm]
    labels = lam * batch.labels + (1.0 - lam) * batch.labels[perm]
    prov = [MixProvenance(int(p), lam, "mixup") for p in perm]
    return MixedBatch(images.astype(batch.images.dtype, copy=False), labels, prov)


def mixup_batch(
    batch: Batch,
    params: MixParams,
    rng: np.random.Generator,
    lam: float | None = None,
) -> MixedBatch:
    """Convex-combine each example with a permuted partner.

    lam overrides the Beta draw when given (used by tests and replay).
    """
    _check_labels(batch.labels)
    if rng.random() >= params.apply_probability:
        return _identity(batch)
    perm = rng.permutation(len(batch.images))
    if lam is None:
        lam = sample_lambda(params.alpha_mixup, rng)
    return _mixup_core(batch, lam, perm)


def cutmix_box(
    height: int,
    width: int,
    lambda_raw: float,
    rng: np.random.Generator,
    center: tuple[int, int] | None = None,
) -> CutMixBox:
    """Sample the paste rectangle for a raw mixing coefficient.

    Side lengths scale with sqrt(1 - lambda); the box is centered at a
    uniform random pixel (overridable) and clipped to the image bounds.
    """
    if not 0.0 <= lambda_raw <= 1.0:
        raise ValueError(f"lambda_raw must be in [0,1]: {lambda_raw}")
    cut = np.sqrt(1.0 - lambda_raw)
    w = int(np.round(width * cut))
    h = int(np.round(height * cut))
    if center is None:
        cx = int(rng.integers(0, width))
        cy = int(rng.integers(0, height))
    else:
        cx, cy = center
    x0 = max(0, min(cx - w // 2, width))
    y0 = max(0, min(cy - h // 2, height))
    x1 = max(x0, min(x0 + w, width))
    y1 = max(y0, min(y0 + h, height))
    return CutMixBox(x0, y0, x1, y1)


def _cutmix_core(batch: Batch, box: CutMixBox, perm: np.ndarray) -> MixedBatch:
    n, height, width, _ = batch.images.shape
    total = height * width
    lam_eff = 1.0 - box.area / total
    images = batch.images.copy()
    images[:, box.y0:box.y1, box.x0:box.x1, :] = (
        batch.images[perm, box.y0:box.y1, box.x0:box.x1, :]
    )
    labels = lam_eff * batch.labels + (1.0 - lam_eff) * batch.labels[perm]
    prov = [MixProvenance(int(p), lam_eff, "cutmix") for p in perm]
    return MixedBatch(images, labels, prov, box=box)


def cutmix_batch(
    batch: Batch,
    params: MixParams,
    rng: np.random.Generator,
    lam: float | None = None,
    box: CutMixBox | None = None,
) -> MixedBatch:
    """Paste a partner region into each image, mixing labels by area.

    The effective label weight uses the clipped box area, so label mass is
    exactly proportional to pixel provenance.
    """
    _check_labels(batch.labels)
    if rng.random() >= params.apply_probability:
        return _identity(batch)
    perm = rng.permutation(len(batch.images))
    if box is None:
        if lam is None:
            lam = sample_lambda(params.alpha_cutmix, rng)
        _, height, width, _ = batch.images.shape
        box = cutmix_box(height, width, lam, rng)
    return _cutmix_core(batch, box, perm)


def apply_mix(batch: Batch, params: MixParams, rng: np.random.Generator) -> MixedBatch:
    """Training-time policy: with apply_probability, run exactly one of
    CutMix or MixUp (chosen uniformly) on the batch; otherwise pass through.
    """
    _check_labels(batch.labels)
    if rng.random() >= params.apply_probability:
        return _identity(batch)
    use_cutmix = bool(rng.integers(0, 2))
    perm = rng.permutation(len(batch.images))
    if use_cutmix:
        lam = sample_lambda(params.alpha_cutmix, rng)
        _, height, width, _ = batch.images.shape
        box = cutmix_box(height, width, lam, rng)
        return _cutmix_core(batch, box, perm)
    lam = sample_lambda(params.alpha_mixup, rng)
    return _mixup_core(batch, lam, perm)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
