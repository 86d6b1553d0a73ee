"""Correlation and redundancy analysis of the independent features."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Tuple

import numpy as np
from scipy import stats
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .dataio import Dataset

logger = logging.getLogger(__name__)

DEFAULT_RHO_THRESHOLD = 0.7
DEFAULT_R2_THRESHOLD = 0.9
RIDGE_JITTER = 1e-8


@dataclass(frozen=True)
class ReductionReport:
    retained: Tuple[str, ...]
    dropped_correlated: Dict[str, str] = field(default_factory=dict)
    dropped_redundant: Tuple[Tuple[str, float], ...] = ()
    flags: Tuple[str, ...] = ()

    def to_dict(self) -> Dict:
        return {
            "retained": list(self.retained),
            "dropped_correlated": dict(sorted(self.dropped_correlated.items())),
            "dropped_redundant": [{"feature": name, "r_squared": r2} for name, r2 in self.dropped_redundant],
            "flags": list(self.flags),
        }


def constant_features(dataset: Dataset) -> List[str]:
    spread = np.ptp(dataset.features, axis=0)
    return [name for name, width in zip(dataset.feature_names, spread) if width == 0]


def spearman_matrix(dataset: Dataset) -> np.ndarray:
    """Spearman correlation (Pearson of average ranks); constant features correlate 0 with everything."""
    if dataset.n < 2:
        raise ValueError("spearman_matrix needs at least two rows")
    ranks = stats.rankdata(dataset.features, axis=0)
    centered = ranks - ranks.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=0))
    constant = norms == 0
    safe = np.where(constant, 1.0, norms)
    rho = (centered.T @ centered) / np.outer(safe, safe)
    rho[constant, :] = 0.0
    rho[:, constant] = 0.0
    rho = np.clip((rho + rho.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(rho, 1.0)
    return rho


def _representative(members: List[int], abs_rho: np.ndarray) -> int:
    """Member least correlated with everything outside the cluster; ties keep column order."""
    outside = [j for j in range(abs_rho.shape[0]) if j not in members]
    if not outside:
        return members[0]
    scores = [abs_rho[i, outside].mean() for i in members]
    return members[int(np.argmin(scores))]


def correlation_filter(dataset: Dataset, rho_threshold: float = DEFAULT_RHO_THRESHOLD) -> ReductionReport:
    """Complete-linkage clustering on 1 - |rho|; one representative kept per cluster."""
    if not 0 < rho_threshold <= 1:
        raise ValueError("rho_threshold must be in (0, 1]")
    names = dataset.feature_names
    flags = tuple(f"constant_feature:{name}" for name in constant_features(dataset))
    if dataset.p == 1:
        return ReductionReport(retained=names, flags=flags)

    abs_rho = np.abs(spearman_matrix(dataset))
    distance = np.clip(1.0 - abs_rho, 0.0, None)
    np.fill_diagonal(distance, 0.0)
    tree = linkage(squareform(distance, checks=False), method="complete")
    # complete linkage: every pair inside a cluster is within the cut distance
    cluster_ids = fcluster(tree, t=1.0 - rho_threshold + 1e-12, criterion="distance")

    keep, dropped = [], {}
    for cluster in sorted(set(cluster_ids), key=lambda c: int(np.flatnonzero(cluster_ids == c)[0])):
        members = [int(i) for i in np.flatnonzero(cluster_ids == cluster)]
        rep = _representative(members, abs_rho)
        keep.append(rep)
        for member in members:
            if member != rep:
                dropped[names[member]] = names[rep]
    retained = tuple(names[i] for i in sorted(keep))
    logger.info("correlation filter kept %d of %d features", len(retained), dataset.p)
    return ReductionReport(retained=retained, dropped_correlated=dropped, flags=flags)


def _r_squared(target: np.ndarray, design: np.ndarray) -> Tuple[float, bool]:
    """OLS R^2 with intercept via the normal equations; jitters the diagonal when singular."""
    sst = float(((target - target.mean()) ** 2).sum())
    if sst == 0:
        return 1.0, False
    x = np.column_stack([np.ones(target.size), design])
    gram = x.T @ x
    jittered = np.linalg.matrix_rank(gram) < gram.shape[0]
    if jittered:
        gram = gram + RIDGE_JITTER * np.eye(gram.shape[0])
    beta = np.linalg.solve(gram, x.T @ target)
    sse = float(((target - x @ beta) ** 2).sum())
    return min(max(1.0 - sse / sst, 0.0), 1.0), jittered


def redundancy_filter(dataset: Dataset, r2_threshold: float = DEFAULT_R2_THRESHOLD) -> ReductionReport:
    """Repeatedly drop the feature best explained by the others while its R^2 >= threshold."""
    if not 0 < r2_threshold <= 1:
        raise ValueError("r2_threshold must be in (0, 1]")
    names = list(dataset.feature_names)
    columns = list(range(dataset.p))
    dropped: List[Tuple[str, float]] = []
    flags: List[str] = []
    while len(columns) > 1:
        scores = []
        for position, column in enumerate(columns):
            others = columns[:position] + columns[position + 1:]
            r2, jittered = _r_squared(dataset.features[:, column], dataset.features[:, others])
            if jittered and f"ridge_jitter:{names[column]}" not in flags:
                flags.append(f"ridge_jitter:{names[column]}")
            scores.append(r2)
        best = int(np.argmax(scores))
        if scores[best] < r2_threshold:
            break
        logger.debug("dropping redundant feature %s (R^2=%.4f)", names[columns[best]], scores[best])
        dropped.append((names[columns[best]], float(scores[best])))
        del columns[best]
    return ReductionReport(
        retained=tuple(names[c] for c in columns),
        dropped_redundant=tuple(dropped),
        flags=tuple(flags),
    )


def reduce_features(
    dataset: Dataset,
    rho_threshold: float = DEFAULT_RHO_THRESHOLD,
    r2_threshold: float = DEFAULT_R2_THRESHOLD,
) -> Tuple[Dataset, ReductionReport]:
    """Correlation filter followed by redundancy filter; returns the reduced dataset and report."""
    correlated = correlation_filter(dataset, rho_threshold)
    stage = dataset.select_features(correlated.retained)
    redundant = redundancy_filter(stage, r2_threshold)
    report = replace(
        correlated,
        retained=redundant.retained,
        dropped_redundant=redundant.dropped_redundant,
        flags=correlated.flags + redundant.flags,
    )
    logger.info("preprocessing retained %s", ", ".join(report.retained))
    return dataset.select_features(report.retained), report
