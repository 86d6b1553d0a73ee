"""Tests for the planted-noise synthetic generator."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from noisegate import synthetic
from noisegate.errors import ConfigError


class TestGenerateSynthetic:

    def test_shape_and_names(self):
        dataset = synthetic.generate_synthetic(n=200, p=4, seed=1)
        assert dataset.n == 200
        assert dataset.feature_names == ("x1", "x2", "x3", "x4")
        assert np.all((dataset.target > 1.0) & (dataset.target < 10.0))

    def test_seed_determinism(self):
        first = synthetic.generate_synthetic(n=100, p=3, seed=5)
        second = synthetic.generate_synthetic(n=100, p=3, seed=5)
        other = synthetic.generate_synthetic(n=100, p=3, seed=6)
        assert_allclose(first.target, second.target)
        assert_allclose(first.features, second.features)
        assert not np.allclose(first.target, other.target)

    def test_band_labels_carry_no_signal(self):
        dataset = synthetic.generate_synthetic(n=10000, p=3, noise_band_pct=10.0, seed=2)
        centre = np.median(dataset.target)
        distance = np.abs(dataset.target - centre)
        ring = (distance >= 0.05 * centre) & (distance < 0.1 * centre)
        outside = distance >= 0.1 * centre
        below = dataset.target <= centre
        corr_in = np.corrcoef(dataset.features[ring, 0], below[ring])[0, 1]
        corr_out = np.corrcoef(dataset.features[outside, 0], below[outside])[0, 1]
        assert abs(corr_in) < 0.2
        assert corr_out < -0.4

    def test_label_agreement_falls_toward_band_edge(self):
        dataset = synthetic.generate_synthetic(n=10000, p=3, noise_band_pct=10.0, seed=3)
        centre = np.median(dataset.target)
        distance = np.abs(dataset.target - centre)
        score = dataset.features @ synthetic.default_weights(3, 1.0)
        agrees = (dataset.target <= centre) == (score <= 0)
        core = distance < 0.05 * centre
        ring = (distance >= 0.05 * centre) & (distance < 0.1 * centre)
        outside = distance >= 0.1 * centre
        assert agrees[core].mean() > 0.7
        assert abs(agrees[ring].mean() - 0.5) < 0.1
        assert agrees[outside].mean() > 0.99

    def test_zero_band_leaves_labels_alone(self):
        dataset = synthetic.generate_synthetic(n=2000, p=2, noise_band_pct=0.0, seed=4)
        score = dataset.features @ synthetic.default_weights(2, 1.0)
        agrees = (dataset.target <= np.median(dataset.target)) == (score <= 0)
        assert agrees.mean() > 0.95

    def test_zero_band_keeps_signal(self):
        dataset = synthetic.generate_synthetic(n=500, p=2, noise_band_pct=0.0, signal_strength=2.0, seed=0)
        assert np.corrcoef(dataset.features[:, 0], dataset.target)[0, 1] > 0.6

    def test_explicit_weights(self):
        dataset = synthetic.generate_synthetic(n=300, p=2, noise_band_pct=0.0, weights=[0.0, 3.0], seed=0)
        assert abs(np.corrcoef(dataset.features[:, 0], dataset.target)[0, 1]) < 0.2

    @pytest.mark.parametrize("kwargs", [
        {"n": 10},
        {"p": 1},
        {"noise_band_pct": 100.0},
        {"signal_strength": -1.0},
        {"p": 3, "weights": [1.0, 2.0]},
    ])
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(ConfigError):
            synthetic.generate_synthetic(**kwargs)
