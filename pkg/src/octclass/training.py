"""Training loop: Adam-style optimizer, categorical cross-entropy, early
stopping on validation loss with best-weight restore, per-epoch history."""

from __future__ import annotations

import copy
import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from .augment import MixParams, apply_mix
from .data import Batch, DatasetManifest, batch_iterator
from .errors import EmptySplit, NonFiniteLoss, ParseError, ShapeMismatch
from .models import ModelHandle

CLIP_EPSILON = 1e-7


@dataclass
class OptimizerParams:
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7


@dataclass
class TrainSeeds:
    data: int = 0
    model: int = 0
    augment: int = 0


@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 1e-4
    max_epochs: int = 50
    patience: int = 10
    min_delta: float = 1e-4
    loss: str = "categorical_crossentropy"
    optimizer: OptimizerParams = field(default_factory=OptimizerParams)
    mix_params: MixParams = field(default_factory=MixParams)
    seeds: TrainSeeds = field(default_factory=TrainSeeds)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1: {self.batch_size}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1: {self.patience}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive: {self.learning_rate}")
        if self.loss != "categorical_crossentropy":
            raise ValueError(f"unsupported loss: {self.loss!r}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    wall_time_s: float


@dataclass
class TrainHistory:
    records: list[EpochRecord]
    best_epoch: int
    stopped_early: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss",
                         "val_acc", "wall_time_s"])
        for r in self.records:
            writer.writerow([r.epoch, repr(r.train_loss), repr(r.train_acc),
                             repr(r.val_loss), repr(r.val_acc),
                             repr(r.wall_time_s)])
        return buf.getvalue()

    def save_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            f.write(self.to_csv())


def parse_history_csv(text: str) -> list[EpochRecord]:
    """Parse a history CSV produced by TrainHistory.to_csv."""
    expected = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc",
                "wall_time_s"]
    try:
        rows = list(csv.reader(io.StringIO(text)))
    except csv.Error as exc:
        raise ParseError(f"cannot parse history CSV: {exc}") from exc
    if not rows or rows[0] != expected:
        raise ParseError(f"bad history CSV header: {rows[0] if rows else 'empty'}")
    records = []
    for row in rows[1:]:
        if not row:
            continue
        if len(row) != len(expected):
            raise ParseError(f"bad history CSV row: {row}")
        try:
            records.append(EpochRecord(int(row[0]), *(float(v) for v in row[1:])))
        except ValueError as exc:
            raise ParseError(f"bad history CSV row: {row}") from exc
    return records


def categorical_crossentropy_per_example(
    probs: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """-sum_c target_c * log(max(prob_c, 1e-7)) for each row."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape or probs.ndim != 2:
        raise ShapeMismatch(
            f"probs {probs.shape} and targets {targets.shape} must be equal 2-D shapes"
        )
    return -(targets * np.log(np.maximum(probs, CLIP_EPSILON))).sum(axis=1)


def categorical_crossentropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean cross-entropy between row-stochastic predictions and soft targets."""
    return float(categorical_crossentropy_per_example(probs, targets).mean())


class EarlyStopping:
    """Stop after `patience` consecutive epochs without a val-loss improvement
    of at least min_delta; remembers the best epoch."""

    def __init__(self, patience: int, min_delta: float = 1e-4):
        self.patience = patience
        self.min_delta = min_delta
        self.best_loss = math.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """Record an epoch's validation loss; True if it improved the best."""
        if val_loss <= self.best_loss - self.min_delta:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.bad_epochs = 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


def _soft_crossentropy(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    # log-sum-exp path; equivalent to the clipped numpy op away from saturation
    return -(targets * torch.log_softmax(logits, dim=1)).sum(dim=1).mean()


def make_optimizer(handle: ModelHandle, config: TrainConfig) -> torch.optim.Optimizer:
    p = config.optimizer
    return torch.optim.Adam(
        handle.network.parameters(),
        lr=config.learning_rate,
        betas=(p.beta1, p.beta2),
        eps=p.epsilon,
    )


def train_epoch(
    handle: ModelHandle,
    batches,
    config: TrainConfig,
    optimizer: torch.optim.Optimizer,
    aug_rng: np.random.Generator | None = None,
    epoch: int = 0,
) -> tuple[float, float]:
    """One pass over `batches`; returns (mean train loss, train accuracy).

    Accuracy compares prediction argmax against the argmax of the (possibly
    soft) target rows.
    """
    network = handle.network
    network.train()
    loss_sum = 0.0
    correct = 0
    count = 0
    for batch_index, batch in enumerate(batches):
        images, labels = batch.images, batch.labels
        if aug_rng is not None and config.mix_params.apply_probability > 0:
            mixed = apply_mix(Batch(images, labels), config.mix_params, aug_rng)
            images, labels = mixed.images, mixed.labels

        x = handle.to_nchw(np.asarray(images, dtype=np.float32))
        y = torch.from_numpy(np.asarray(labels, dtype=np.float32))
        optimizer.zero_grad(set_to_none=True)
        logits = network(x)
        loss = _soft_crossentropy(logits, y)
        if not torch.isfinite(loss):
            raise NonFiniteLoss(
                f"non-finite training loss at epoch {epoch}, batch {batch_index}: "
                f"{loss.item()}"
            )
        loss.backward()
        optimizer.step()

        n = len(images)
        loss_sum += float(loss.item()) * n
        with torch.no_grad():
            correct += int((logits.argmax(dim=1) == y.argmax(dim=1)).sum().item())
        count += n
    if count == 0:
        raise EmptySplit("train_epoch received no batches")
    return loss_sum / count, correct / count


@dataclass
class EvalResult:
    loss: float
    accuracy: float
    true_indices: np.ndarray
    pred_indices: np.ndarray


def evaluate_split(
    handle: ModelHandle,
    manifest: DatasetManifest,
    split: str,
    batch_size: int = 32,
) -> EvalResult:
    """Deterministic evaluation pass; loss is the clipped cross-entropy of
    the model's probability outputs."""
    loss_sum = 0.0
    correct = 0
    count = 0
    trues: list[np.ndarray] = []
    preds: list[np.ndarray] = []
    for batch in batch_iterator(manifest, split, batch_size,
                                shuffle_seed=0, shuffle=False):
        probs = handle.forward(batch.images)
        loss_sum += float(categorical_crossentropy_per_example(
            probs, batch.labels).sum())
        t = batch.labels.argmax(axis=1)
        p = probs.argmax(axis=1)
        correct += int((t == p).sum())
        count += len(batch.images)
        trues.append(t)
        preds.append(p)
    return EvalResult(
        loss=loss_sum / count,
        accuracy=correct / count,
        true_indices=np.concatenate(trues),
        pred_indices=np.concatenate(preds),
    )


def fit(
    handle: ModelHandle,
    manifest: DatasetManifest,
    config: TrainConfig,
    log_fn=None,
) -> tuple[ModelHandle, TrainHistory]:
    """Train until max_epochs or early stop; restores best-epoch weights."""
    for split in ("train", "val"):
        if not manifest.split_entries(split):
            raise EmptySplit(f"manifest has an empty {split!r} split")

    torch.manual_seed(config.seeds.model)
    optimizer = make_optimizer(handle, config)
    aug_rng = np.random.default_rng(config.seeds.augment)
    stopper = EarlyStopping(config.patience, config.min_delta)

    records: list[EpochRecord] = []
    best_state = None
    stopped_early = False
    for epoch in range(1, config.max_epochs + 1):
        t0 = time.monotonic()
        batches = batch_iterator(manifest, "train", config.batch_size,
                                 shuffle_seed=config.seeds.data, epoch=epoch)
        train_loss, train_acc = train_epoch(
            handle, batches, config, optimizer, aug_rng=aug_rng, epoch=epoch
        )
        val = evaluate_split(handle, manifest, "val", config.batch_size)
        record = EpochRecord(
            epoch=epoch,
            train_loss=train_loss,
            train_acc=train_acc,
            val_loss=val.loss,
            val_acc=val.accuracy,
            wall_time_s=time.monotonic() - t0,
        )
        records.append(record)
        if log_fn is not None:
            log_fn(record)

        if stopper.update(epoch, val.loss):
            best_state = copy.deepcopy(handle.network.state_dict())
        if stopper.should_stop:
            stopped_early = True
            break

    if best_state is not None:
        handle.network.load_state_dict(best_state)
    history = TrainHistory(records=records, best_epoch=stopper.best_epoch,
                           stopped_early=stopped_early)
    return handle, history
