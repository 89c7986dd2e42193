"""Loss contract, early stopping, history CSV, and the fit loop."""

import math

import numpy as np
import pytest
import torch

from octclass.data import make_splits, scan_dataset_dir
from octclass.errors import EmptySplit, NonFiniteLoss, ParseError, ShapeMismatch
from octclass.models import ModelConfig, build_model
from octclass.training import (
    CLIP_EPSILON,
    EarlyStopping,
    EpochRecord,
    TrainConfig,
    TrainHistory,
    TrainSeeds,
    categorical_crossentropy,
    categorical_crossentropy_per_example,
    evaluate_split,
    fit,
    make_optimizer,
    parse_history_csv,
    train_epoch,
)


# independent oracle: clipped cross-entropy computed element by element
def ce_oracle(probs, targets):
    total = 0.0
    for p_row, t_row in zip(probs, targets):
        for p, t in zip(p_row, t_row):
            if t > 0:
                total += -t * math.log(max(float(p), CLIP_EPSILON))
    return total / len(probs)


class TestCrossEntropy:
    def test_uniform_is_log_n(self):
        probs = np.full((10, 8), 1.0 / 8.0)
        targets = np.zeros((10, 8))
        targets[:, 2] = 1.0
        assert abs(categorical_crossentropy(probs, targets) - math.log(8)) < 1e-9

    def test_perfect_prediction_is_zero(self):
        targets = np.zeros((4, 3))
        targets[np.arange(4) % 3 == 0, 0] = 1.0
        targets[np.arange(4) % 3 == 1, 1] = 1.0
        targets[np.arange(4) % 3 == 2, 2] = 1.0
        assert categorical_crossentropy(targets.copy(), targets) <= 1e-12

    def test_zero_probability_clipped(self):
        probs = np.zeros((1, 2))
        probs[0, 1] = 1.0
        targets = np.array([[1.0, 0.0]])
        got = categorical_crossentropy(probs, targets)
        assert abs(got - (-math.log(CLIP_EPSILON))) < 1e-9

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(0)
        probs = rng.dirichlet(np.ones(5), size=12)
        targets = np.zeros((12, 5))
        targets[np.arange(12), rng.integers(0, 5, 12)] = 1.0
        assert abs(categorical_crossentropy(probs, targets)
                   - ce_oracle(probs, targets)) < 1e-12

    def test_soft_targets(self):
        probs = np.array([[0.5, 0.5]])
        targets = np.array([[0.3, 0.7]])
        expected = -(0.3 * math.log(0.5) + 0.7 * math.log(0.5))
        assert abs(categorical_crossentropy(probs, targets) - expected) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            categorical_crossentropy_per_example(np.ones((2, 3)), np.ones((2, 4)))


class TestEarlyStopping:
    def test_monotone_worsening_stops_after_patience_plus_one(self):
        stopper = EarlyStopping(patience=10, min_delta=1e-4)
        epochs_run = 0
        for epoch in range(1, 51):
            epochs_run += 1
            stopper.update(epoch, 1.0 + 0.1 * (epoch - 1))
            if stopper.should_stop:
                break
        assert epochs_run == 11
        assert stopper.best_epoch == 1

    def test_improvement_requires_min_delta(self):
        stopper = EarlyStopping(patience=2, min_delta=0.1)
        assert stopper.update(1, 1.0)
        # within min_delta of best: not an improvement
        assert not stopper.update(2, 0.95)
        # exactly best - min_delta: counts as improvement
        assert stopper.update(3, 0.9)
        assert stopper.best_epoch == 3

    def test_plateau_stops(self):
        stopper = EarlyStopping(patience=3, min_delta=1e-4)
        count = 0
        for epoch in range(1, 20):
            count += 1
            stopper.update(epoch, 0.5)
            if stopper.should_stop:
                break
        assert count == 4  # first epoch improves on infinity, then 3 bad

    def test_recovery_resets_counter(self):
        stopper = EarlyStopping(patience=2, min_delta=1e-4)
        for epoch, loss in enumerate([1.0, 1.1, 0.8, 0.9], start=1):
            stopper.update(epoch, loss)
        # without the reset at epoch 3, epochs 2 and 4 would already stop it
        assert not stopper.should_stop
        assert stopper.best_epoch == 3
        stopper.update(5, 0.95)
        assert stopper.should_stop  # two consecutive bad epochs after recovery


class TestHistoryCsv:
    def records(self):
        return [
            EpochRecord(1, 2.0, 0.2, 1.9, 0.25, 3.5),
            EpochRecord(2, 1.5, 0.5, 1.4, 0.5, 3.4),
        ]

    def test_header_and_round_trip(self, tmp_path):
        hist = TrainHistory(records=self.records(), best_epoch=2,
                            stopped_early=False)
        text = hist.to_csv()
        assert text.splitlines()[0] == (
            "epoch,train_loss,train_acc,val_loss,val_acc,wall_time_s")
        parsed = parse_history_csv(text)
        assert parsed == self.records()

    def test_save_csv(self, tmp_path):
        hist = TrainHistory(records=self.records(), best_epoch=1,
                            stopped_early=True)
        p = tmp_path / "h.csv"
        hist.save_csv(str(p))
        assert parse_history_csv(p.read_text()) == self.records()

    def test_bad_header(self):
        with pytest.raises(ParseError):
            parse_history_csv("nope,nope\n1,2\n")

    def test_bad_row(self):
        good = "epoch,train_loss,train_acc,val_loss,val_acc,wall_time_s"
        with pytest.raises(ParseError):
            parse_history_csv(good + "\n1,a,b,c,d,e\n")
        with pytest.raises(ParseError):
            parse_history_csv(good + "\n1,0.5,0.5\n")


class TestOptimizer:
    def test_hyperparameters_applied(self, toy_handle):
        config = TrainConfig(learning_rate=3e-4)
        opt = make_optimizer(toy_handle, config)
        group = opt.param_groups[0]
        assert group["lr"] == 3e-4
        assert group["betas"] == (0.9, 0.999)
        assert group["eps"] == 1e-7

    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            TrainConfig(loss="mse")
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=-1.0)


class TestFit:
    def config(self, epochs=2):
        return TrainConfig(batch_size=8, learning_rate=1e-3, max_epochs=epochs,
                           patience=10, seeds=TrainSeeds(data=1, model=2, augment=3))

    def test_runs_and_records(self, split_manifest):
        handle = build_model(ModelConfig(architecture="tiny_cnn",
                                         width_multiplier=0.5, num_classes=8,
                                         rng_seed=0))
        handle, history = fit(handle, split_manifest, self.config())
        assert len(history.records) == 2
        assert all(r.wall_time_s >= 0 for r in history.records)
        assert history.best_epoch in (1, 2)

    def test_restores_best_weights(self, split_manifest):
        handle = build_model(ModelConfig(architecture="tiny_cnn",
                                         width_multiplier=0.5, num_classes=8,
                                         rng_seed=0))
        handle, history = fit(handle, split_manifest, self.config(epochs=3))
        best = min(r.val_loss for r in history.records)
        val = evaluate_split(handle, split_manifest, "val", batch_size=8)
        assert abs(val.loss - best) < 1e-9
        assert history.records[history.best_epoch - 1].val_loss == best

    def test_empty_split_rejected(self, dataset_root):
        manifest = scan_dataset_dir(dataset_root)  # splits never assigned
        handle = build_model(ModelConfig(architecture="tiny_cnn",
                                         width_multiplier=0.5, num_classes=8))
        with pytest.raises(EmptySplit):
            fit(handle, manifest, self.config())

    def test_nonfinite_loss_diagnostic(self, toy_handle):
        from octclass.data import Batch

        images = np.full((4, 64, 64, 3), np.nan, dtype=np.float32)
        labels = np.zeros((4, 4), dtype=np.float32)
        labels[:, 0] = 1.0
        config = TrainConfig(batch_size=4, learning_rate=1e-3)
        handle = build_model(ModelConfig(architecture="tiny_cnn",
                                         width_multiplier=0.5, num_classes=4,
                                         input_shape=(64, 64, 3)))
        opt = make_optimizer(handle, config)
        with pytest.raises(NonFiniteLoss) as err:
            train_epoch(handle, iter([Batch(images, labels)]), config, opt,
                        epoch=7)
        assert "epoch 7" in str(err.value)


class TestEvaluateSplit:
    def test_deterministic(self, split_manifest, tiny_handle):
        a = evaluate_split(tiny_handle, split_manifest, "val", batch_size=4)
        b = evaluate_split(tiny_handle, split_manifest, "val", batch_size=4)
        assert a.loss == b.loss
        assert np.array_equal(a.pred_indices, b.pred_indices)

    def test_accuracy_matches_indices(self, split_manifest, tiny_handle):
        r = evaluate_split(tiny_handle, split_manifest, "val", batch_size=4)
        assert r.accuracy == float((r.true_indices == r.pred_indices).mean())
