import numpy as np
import pytest

from noisegate import dataio, learners, synthetic


@pytest.fixture
def linear_dataset():
    """120 rows, target rising with x1 and x2; x3 is pure noise."""
    rng = np.random.default_rng(7)
    features = rng.standard_normal((120, 3))
    target = 10.0 + 2.0 * features[:, 0] + 1.0 * features[:, 1] + 0.1 * rng.standard_normal(120)
    return dataio.Dataset(("x1", "x2", "x3"), features, target)


@pytest.fixture
def planted_dataset():
    return synthetic.generate_synthetic(n=600, p=4, noise_band_pct=10.0, signal_strength=2.0, seed=3)


@pytest.fixture
def fast_grid():
    """One cheap candidate per classifier so bootstrap tests stay quick."""
    return learners.TuningGrid(
        candidates={
            "rf": ({"n_trees": 25, "mtry": 2},),
            "lr": ({"ridge": 1e-4},),
            "cart": ({"cp": 1e-3, "min_samples_leaf": 7},),
            "knn": ({"k": 7},),
        },
        inner_bootstraps=2,
    )


@pytest.fixture
def synthetic_csv(tmp_path):
    dataset = synthetic.generate_synthetic(n=300, p=3, noise_band_pct=10.0, signal_strength=2.0, seed=11)
    return dataio.write_csv(dataset, tmp_path / "synthetic.csv")
