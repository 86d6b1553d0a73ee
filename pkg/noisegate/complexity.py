"""Data complexity measures: Fisher's ratio (F1), linear separability (L2),
mixture identifiability (N2) and non-linearity (N4).

Distance-based measures work on features z-scored with the evaluated
subset's own statistics.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy.special import expit
from sklearn.neighbors import NearestNeighbors

from . import utils
from .dataio import CLASS1, CLASS2, Dataset, QuantaAssignment
from .errors import InsufficientClass
from .learners_runtime.logistic_regression import fit_irls

logger = logging.getLogger(__name__)

F1_CAP = 1e12
L2_RIDGE = 1e-4
MEASURES = ("f1", "l2", "n2", "n4")


@dataclass(frozen=True)
class ComplexityReport:
    f1: float
    l2: float
    n2: float
    n4: float
    n_points: int = 0
    single_class: bool = False
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> Dict[str, float]:
        return {"f1": self.f1, "l2": self.l2, "n2": self.n2, "n4": self.n4}

    def to_dict(self) -> Dict:
        out = dict(self.as_dict())
        out.update({"n_points": self.n_points, "single_class": self.single_class, "flags": list(self.flags)})
        return out


def standardize(features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    sd = features.std(axis=0)
    return (features - features.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


def _split(features: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels)
    first, second = features[labels == CLASS1], features[labels == CLASS2]
    if len(first) < 2 or len(second) < 2:
        raise InsufficientClass(f"class sizes {len(first)}/{len(second)}; need at least 2 points per class")
    return first, second


def fisher_ratios(features: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Per-feature (mu1 - mu2)^2 / (var1 + var2) and whether any ratio hit the cap."""
    first, second = _split(features, labels)
    gap = (first.mean(axis=0) - second.mean(axis=0)) ** 2
    spread = first.var(axis=0) + second.var(axis=0)
    ratios = np.zeros_like(gap)
    positive = spread > 0
    ratios[positive] = gap[positive] / spread[positive]
    capped = (~positive) & (gap > 0)
    ratios[capped] = F1_CAP
    return ratios, bool(capped.any())


def fisher_f1(features: np.ndarray, labels: np.ndarray) -> float:
    ratios, _ = fisher_ratios(features, labels)
    return float(ratios.max())


def linear_sep_l2(features: np.ndarray, labels: np.ndarray, seed: int = 0) -> float:
    """Training error of ridge logistic regression at cutoff 0.5."""
    _split(features, labels)
    z = standardize(features)
    truth = np.asarray(labels) == CLASS1
    coef = fit_irls(z, truth.astype(float), ridge=L2_RIDGE).coef
    predicted = expit(coef[0] + z @ coef[1:]) >= 0.5
    return float(np.mean(predicted != truth))


def mixture_n2(features: np.ndarray, labels: np.ndarray) -> float:
    """Sum of nearest same-class distances over sum of nearest other-class distances."""
    _split(features, labels)
    z = standardize(features)
    labels = np.asarray(labels)
    intra = inter = 0.0
    for cls in (CLASS1, CLASS2):
        own, other = z[labels == cls], z[labels != cls]
        # the first neighbour of a point within its own class is itself
        same, _ = NearestNeighbors(n_neighbors=2, algorithm="brute").fit(own).kneighbors(own)
        diff, _ = NearestNeighbors(n_neighbors=1, algorithm="brute").fit(other).kneighbors(own)
        intra += float(same[:, 1].sum())
        inter += float(diff[:, 0].sum())
    if inter == 0:
        return 0.0 if intra == 0 else F1_CAP
    return intra / inter


def interpolate_same_class(
    features: np.ndarray, labels: np.ndarray, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """N synthetic points, each on the segment between two distinct same-class points.

    Draw order per synthetic point: class (proportional to class size), first
    parent, second parent, then one alpha ~ U(0, 1).
    """
    labels = np.asarray(labels)
    n = labels.size
    members = {cls: np.flatnonzero(labels == cls) for cls in (CLASS1, CLASS2)}
    share1 = members[CLASS1].size / n
    pick_class = rng.random(n)
    first_draw = rng.random(n)
    second_draw = rng.random(n)
    alpha = rng.random(n)

    synthetic_labels = np.where(pick_class < share1, CLASS1, CLASS2)
    parents_a = np.empty(n, dtype=int)
    parents_b = np.empty(n, dtype=int)
    for cls, idx in members.items():
        mask = synthetic_labels == cls
        size = idx.size
        i = np.minimum((first_draw[mask] * size).astype(int), size - 1)
        j = np.minimum((second_draw[mask] * (size - 1)).astype(int), size - 2)
        j = j + (j >= i)
        parents_a[mask] = idx[i]
        parents_b[mask] = idx[j]
    synthetic = features[parents_a] + alpha[:, None] * (features[parents_b] - features[parents_a])
    return synthetic, synthetic_labels


def nonlinearity_n4(features: np.ndarray, labels: np.ndarray, seed: int = 0) -> float:
    """1-NN error on same-class interpolations, 1-NN fitted on the real points."""
    _split(features, labels)
    z = standardize(features)
    labels = np.asarray(labels)
    synthetic, synthetic_labels = interpolate_same_class(z, labels, utils.substream(seed))
    _, nearest = NearestNeighbors(n_neighbors=1, algorithm="brute").fit(z).kneighbors(synthetic)
    return float(np.mean(labels[nearest[:, 0]] != synthetic_labels))


def complexity_report(features: np.ndarray, labels: np.ndarray, seed: int = 0) -> ComplexityReport:
    labels = np.asarray(labels)
    present = np.unique(labels)
    n_points = int(labels.size)
    if present.size < 2:
        return ComplexityReport(0.0, 0.0, 0.0, 0.0, n_points, True, ("single_class",))
    if min(np.sum(labels == CLASS1), np.sum(labels == CLASS2)) < 2:
        return ComplexityReport(0.0, 0.0, 0.0, 0.0, n_points, False, ("insufficient_class",))
    ratios, capped = fisher_ratios(features, labels)
    flags = ("f1_capped",) if capped else ()
    return ComplexityReport(
        f1=float(ratios.max()),
        l2=linear_sep_l2(features, labels, seed),
        n2=mixture_n2(features, labels),
        n4=nonlinearity_n4(features, labels, seed),
        n_points=n_points,
        flags=flags,
    )


def quanta_profile(
    dataset: Dataset,
    labels: np.ndarray,
    quanta: QuantaAssignment,
    seed: int = 0,
    jobs: int = 1,
) -> List[Tuple[int, ComplexityReport]]:
    """One complexity report per quantum, pooling both classes' points of that bin."""
    labels = np.asarray(labels)

    def _one(b: int) -> Tuple[int, ComplexityReport]:
        mask = quanta.bin_index == b
        if not mask.any():
            return b, ComplexityReport(0.0, 0.0, 0.0, 0.0, 0, True, ("empty_bin",))
        return b, complexity_report(dataset.features[mask], labels[mask], utils.derive_seed(seed, b))

    profile = utils.parallel_map(_one, range(1, quanta.n_bins + 1), jobs)
    for b, report in profile:
        logger.debug("quantum %d: n=%d %s", b, report.n_points, report.as_dict())
    return profile
