"""Occlusion sensitivity: exact agreement with a naive reference loop,
overlap averaging, negative-drop flooring, and uncovered-edge behavior."""

import numpy as np
import pytest

from octclass.errors import InvalidConfig
from octclass.xai import OcclusionConfig, occlusion_positions, occlusion_sensitivity


class TopHalfStub:
    """Class-0 probability is the mean of the top half of the image, so
    occluding bottom-only patches provably changes nothing."""

    class_order = ("top", "rest")

    def forward(self, batch):
        half = batch.shape[1] // 2
        p = batch[:, :half].reshape(len(batch), -1).mean(axis=1).astype(np.float64)
        return np.stack([p, 1.0 - p], axis=1)


class InverseStub:
    """Class-0 probability rises when pixels are darkened, so every
    occlusion drop on a bright image is negative."""

    class_order = ("dark", "rest")

    def forward(self, batch):
        p = 1.0 - batch.reshape(len(batch), -1).mean(axis=1).astype(np.float64)
        return np.stack([p, 1.0 - p], axis=1)


def naive_reference(model, image, class_idx, patch, stride, baseline):
    """Straight-line reimplementation used as the equality oracle."""
    h, w = image.shape[0], image.shape[1]
    base_prob = float(model.forward(image[None])[0, class_idx])
    total = np.zeros((h, w), dtype=np.float64)
    hits = np.zeros((h, w), dtype=np.int64)
    for y0 in range(0, h - patch + 1, stride):
        for x0 in range(0, w - patch + 1, stride):
            masked = image.copy()
            masked[y0:y0 + patch, x0:x0 + patch, :] = baseline
            prob = float(model.forward(masked[None])[0, class_idx])
            total[y0:y0 + patch, x0:x0 + patch] += base_prob - prob
            hits[y0:y0 + patch, x0:x0 + patch] += 1
    raw = np.zeros((h, w), dtype=np.float64)
    covered = hits > 0
    raw[covered] = total[covered] / hits[covered]
    raw = np.maximum(raw, 0.0)
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.zeros((h, w), dtype=np.float64)
    return (raw - lo) / (hi - lo)


class TestPositions:
    def test_paper_scale_grid(self):
        pos = occlusion_positions(224, 32, 16)
        assert pos == list(range(0, 193, 16))
        assert len(pos) == 13  # 13 x 13 = 169 occlusions

    def test_exact_cover(self):
        assert occlusion_positions(64, 32, 16) == [0, 16, 32]
        assert occlusion_positions(64, 16, 8)[-1] == 48

    def test_non_dividing_leaves_edge(self):
        pos = occlusion_positions(64, 15, 8)
        assert pos[-1] + 15 == 63  # last row/col never occluded


class TestConfigValidation:
    def test_bad_geometry(self):
        with pytest.raises(InvalidConfig):
            OcclusionConfig(patch_size=16, stride=0)
        with pytest.raises(InvalidConfig):
            OcclusionConfig(patch_size=16, stride=17)
        with pytest.raises(InvalidConfig):
            OcclusionConfig(patch_size=225, stride=16)

    def test_bad_baseline(self):
        with pytest.raises(InvalidConfig):
            OcclusionConfig(baseline_value=-0.1)
        with pytest.raises(InvalidConfig):
            OcclusionConfig(baseline_value=1.1)


class TestSensitivity:
    def test_matches_naive_reference_exactly(self, toy_handle, rng):
        image = rng.random((64, 64, 3), dtype=np.float32)
        config = OcclusionConfig(patch_size=16, stride=8)
        smap = occlusion_sensitivity(toy_handle, image, 1, config)
        expected = naive_reference(toy_handle, image, 1, 16, 8, 0.5)
        assert np.array_equal(smap.values, expected)

    def test_map_contract(self, toy_handle, rng):
        image = rng.random((64, 64, 3), dtype=np.float32)
        smap = occlusion_sensitivity(toy_handle, image, 3,
                                     OcclusionConfig(patch_size=32, stride=16))
        assert smap.values.shape == (64, 64)
        assert smap.method == "occlusion"
        assert smap.target_class.index == 3
        assert smap.values.min() >= 0.0 and smap.values.max() <= 1.0

    def test_deterministic(self, toy_handle, rng):
        image = rng.random((64, 64, 3), dtype=np.float32)
        config = OcclusionConfig(patch_size=32, stride=16)
        a = occlusion_sensitivity(toy_handle, image, 0, config)
        b = occlusion_sensitivity(toy_handle, image, 0, config)
        assert np.array_equal(a.values, b.values)

    def test_irrelevant_region_scores_zero(self):
        image = np.ones((64, 64, 3), dtype=np.float32)
        smap = occlusion_sensitivity(TopHalfStub(), image, 0,
                                     OcclusionConfig(patch_size=15, stride=8))
        # patches starting at rows >= 32 never touch the top half
        assert (smap.values[39:, :] == 0.0).all()
        assert smap.values[0, 0] > 0.0
        # last row and column are never covered by the 15/8 grid
        assert (smap.values[:, 63] == 0.0).all()
        assert (smap.values[63, :] == 0.0).all()

    def test_negative_drops_floor_to_zero(self):
        image = np.ones((64, 64, 3), dtype=np.float32)
        smap = occlusion_sensitivity(InverseStub(), image, 0,
                                     OcclusionConfig(patch_size=16, stride=8))
        assert np.array_equal(smap.values, np.zeros((64, 64)))
