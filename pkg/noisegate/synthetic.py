"""Synthetic datasets with a planted discretization-noise band.

Recipe:
  features   X ~ N(0, 1), n x p
  score      s = X @ w, with w_j = signal_strength * 0.6**j unless given
  target     y = 1 + 9 * sigmoid(s + e), e ~ N(0, 0.05^2)
  noise band let c be the median of y and h = c * noise_band_pct / 100.
             Rows with h/2 <= |y - c| < h are mirrored to 2c - y with
             probability 1/2, so their class at the cutpoint c is a coin
             flip. Mirroring keeps |y - c|, so every window around c holds
             the same rows before and after. Rows closer to c keep their
             label, so the share of flipped labels inside a window grows
             up to the band edge and N4 peaks there.
"""
from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from . import utils
from .dataio import Dataset
from .errors import ConfigError

logger = logging.getLogger(__name__)

WEIGHT_DECAY = 0.6
BASE_NOISE_SD = 0.05
# fraction of the band half-width from which labels become coin flips
RANDOM_LABEL_FROM = 0.5
TARGET_COLUMN = "y"


def default_weights(p: int, signal_strength: float) -> np.ndarray:
    return signal_strength * WEIGHT_DECAY ** np.arange(p)


def generate_synthetic(
    n: int = 2000,
    p: int = 5,
    noise_band_pct: float = 10.0,
    signal_strength: float = 1.0,
    seed: int = 0,
    weights: Optional[Sequence[float]] = None,
) -> Dataset:
    if n < 50:
        raise ConfigError("synthetic data needs n >= 50")
    if p < 2:
        raise ConfigError("synthetic data needs p >= 2")
    if not 0 <= noise_band_pct < 100:
        raise ConfigError("noise_band_pct must be in [0, 100)")
    if signal_strength < 0:
        raise ConfigError("signal_strength must be non-negative")
    w = default_weights(p, signal_strength) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (p,):
        raise ConfigError(f"expected {p} weights, got {w.size}")

    rng = utils.substream(seed)
    features = rng.standard_normal((n, p))
    noise = rng.normal(0.0, BASE_NOISE_SD, size=n)
    target = 1.0 + 9.0 * expit(features @ w + noise)
    coin = rng.random(n)

    centre = float(np.median(target))
    half = centre * noise_band_pct / 100.0
    offset = target - centre
    distance = np.abs(offset)
    ring = (distance >= RANDOM_LABEL_FROM * half) & (distance < half)
    mirrored = ring & (coin < 0.5)
    target[mirrored] = centre - offset[mirrored]
    logger.info(
        "generated %d rows, %d features, %d rows in the planted band, %d mirrored",
        n, p, int(np.sum(distance < half)), int(mirrored.sum()),
    )
    return Dataset(
        feature_names=tuple(f"x{j + 1}" for j in range(p)),
        features=features,
        target=target,
        source_path="synthetic",
    )
