"""Discretization thresholds, class labels, noisy-area estimation and extremes."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import utils
from .complexity import nonlinearity_n4
from .dataio import CLASS1, CLASS2, Dataset
from .errors import ConfigError, DegenerateTarget, EmptyClass

logger = logging.getLogger(__name__)

CART_MINBUCKET = 7
CART_MINSPLIT = 20
DEFAULT_EXTREMES_FRACTION = 0.10
MIN_WINDOW_CLASS = 2


class ThresholdMethod(str, Enum):
    MEDIAN = "median"
    CKMEANS = "ckmeans"
    CART = "cart"

    @classmethod
    def parse(cls, value: "str | ThresholdMethod") -> "ThresholdMethod":
        if isinstance(value, ThresholdMethod):
            return value
        key = str(value).strip().lower()
        aliases = {"mt": cls.MEDIAN, "ct": cls.CKMEANS, "rtt": cls.CART, "cartstump": cls.CART}
        try:
            return aliases.get(key) or cls(key)
        except ValueError:
            raise ConfigError(f"unknown threshold method {value!r}; choose median, ckmeans or cart") from None


@dataclass(frozen=True)
class DiscretizationSpec:
    """``method`` is None when the cutpoint was supplied by a domain expert."""

    method: Optional[ThresholdMethod]
    cutpoint: float
    labels: np.ndarray

    @property
    def method_name(self) -> str:
        return self.method.value if self.method else "expert"

    @property
    def class_counts(self) -> Dict[str, int]:
        return {"class1": int(np.sum(self.labels == CLASS1)), "class2": int(np.sum(self.labels == CLASS2))}


@dataclass(frozen=True)
class NoisyAreaSpec:
    """Noisy area ``(lower, upper)`` around the cutpoint; ``limit_pct`` None means no noisy area."""

    cutpoint: float
    step_size_pct: float
    limit_pct: Optional[float]
    lower: float
    upper: float
    noisy_fraction: float
    per_step_nonlinearity: Tuple[Tuple[float, float], ...] = ()
    source: str = "algorithm"
    flags: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def found(self) -> bool:
        return self.limit_pct is not None

    def mask(self, target: np.ndarray) -> np.ndarray:
        if not self.found:
            return np.zeros(np.asarray(target).size, dtype=bool)
        target = np.asarray(target)
        return (target > self.lower) & (target < self.upper)

    def to_dict(self) -> Dict:
        return {
            "cutpoint": self.cutpoint,
            "step_size_pct": self.step_size_pct,
            "limit_pct": self.limit_pct,
            "lower": self.lower if self.found else None,
            "upper": self.upper if self.found else None,
            "noisy_fraction": self.noisy_fraction,
            "per_step_nonlinearity": [{"x_pct": x, "n4": n4} for x, n4 in self.per_step_nonlinearity],
            "source": self.source,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class ExtremesSpec:
    fraction: float
    low_indices: np.ndarray
    high_indices: np.ndarray

    @property
    def indices(self) -> np.ndarray:
        return np.sort(np.concatenate([self.low_indices, self.high_indices]))

    def mask(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=bool)
        out[self.indices] = True
        return out


def _sorted_target(target: Sequence[float]) -> np.ndarray:
    values = np.sort(np.asarray(target, dtype=float))
    if values.size < 2:
        raise DegenerateTarget("at least two target values are needed for a threshold")
    return values


def threshold_median(target: Sequence[float]) -> float:
    return float(np.median(_sorted_target(target)))


def _segment_cost(prefix: np.ndarray, prefix_sq: np.ndarray, start: np.ndarray, stop: int) -> np.ndarray:
    """Within-segment sum of squares of sorted[start:stop] for an array of starts."""
    count = stop - start
    total = prefix[stop] - prefix[start]
    return (prefix_sq[stop] - prefix_sq[start]) - total ** 2 / count


def optimal_partition(values: Sequence[float], k: int = 2) -> List[int]:
    """Optimal contiguous k-partition of sorted 1-D values by dynamic programming.

    Minimises the total within-cluster sum of squared deviations. Boundaries
    only fall between distinct values. Returns the start index of every
    cluster after the first; ties keep the leftmost boundary.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if np.unique(values).size < k:
        raise DegenerateTarget(f"need at least {k} distinct values")
    prefix = np.concatenate([[0.0], np.cumsum(values)])
    prefix_sq = np.concatenate([[0.0], np.cumsum(values ** 2)])
    allowed = np.concatenate([[False], values[1:] > values[:-1]])  # boundary before index j

    # cost[m][i]: best cost of values[:i] in m clusters; back[m][i]: start of the last cluster
    cost = np.full((k + 1, n + 1), np.inf)
    back = np.zeros((k + 1, n + 1), dtype=int)
    for i in range(1, n + 1):
        cost[1, i] = _segment_cost(prefix, prefix_sq, np.array([0]), i)[0]
    for m in range(2, k + 1):
        stops = range(m, n + 1) if m < k else [n]
        for i in stops:
            starts = np.arange(m - 1, i)
            candidate = cost[m - 1, starts] + _segment_cost(prefix, prefix_sq, starts, i)
            candidate[~allowed[starts]] = np.inf
            best = int(np.argmin(candidate))
            cost[m, i] = candidate[best]
            back[m, i] = starts[best]
    boundaries, stop = [], n
    for m in range(k, 1, -1):
        stop = int(back[m, stop])
        boundaries.append(stop)
    return sorted(boundaries)


def threshold_ckmeans(target: Sequence[float]) -> float:
    """Largest value of the lower cluster of the optimal 1-D 2-means split."""
    values = _sorted_target(target)
    if values[0] == values[-1]:
        raise DegenerateTarget("all target values are identical")
    (split,) = optimal_partition(values, 2)
    return float(values[split - 1])


def threshold_cart(
    target: Sequence[float],
    minbucket: int = CART_MINBUCKET,
    minsplit: int = CART_MINSPLIT,
) -> float:
    """Root split of a regression stump: the midpoint minimising total within-group SSE.

    Below ``minsplit`` rows the bucket constraint relaxes to one row per side.
    """
    values = _sorted_target(target)
    if values[0] == values[-1]:
        raise DegenerateTarget("all target values are identical")
    n = values.size
    if n < minsplit:
        minbucket = 1
    prefix = np.concatenate([[0.0], np.cumsum(values)])
    prefix_sq = np.concatenate([[0.0], np.cumsum(values ** 2)])
    left_sizes = np.arange(1, n)
    valid = (values[1:] > values[:-1]) & (left_sizes >= minbucket) & (n - left_sizes >= minbucket)
    if not valid.any():
        raise DegenerateTarget(f"no split leaves {minbucket} rows on each side")
    left = prefix_sq[left_sizes] - prefix[left_sizes] ** 2 / left_sizes
    right_sum = prefix[n] - prefix[left_sizes]
    right = (prefix_sq[n] - prefix_sq[left_sizes]) - right_sum ** 2 / (n - left_sizes)
    sse = np.where(valid, left + right, np.inf)
    best = int(np.argmin(sse))
    return float((values[best] + values[best + 1]) / 2.0)


def compute_threshold(method: "str | ThresholdMethod", target: Sequence[float]) -> float:
    method = ThresholdMethod.parse(method)
    if method is ThresholdMethod.MEDIAN:
        return threshold_median(target)
    if method is ThresholdMethod.CKMEANS:
        return threshold_ckmeans(target)
    return threshold_cart(target)


def assign_labels(target: np.ndarray, cutpoint: float) -> np.ndarray:
    """class1 for targets at or below the cutpoint."""
    return np.where(np.asarray(target) <= cutpoint, CLASS1, CLASS2)


def discretize(
    dataset: Dataset,
    cutpoint: float,
    method: "str | ThresholdMethod | None" = None,
) -> DiscretizationSpec:
    if not np.isfinite(cutpoint):
        raise ConfigError("cutpoint must be finite")
    labels = assign_labels(dataset.target, cutpoint)
    labels.setflags(write=False)
    n1 = int(np.sum(labels == CLASS1))
    if n1 == 0 or n1 == dataset.n:
        empty = "class1" if n1 == 0 else "class2"
        raise EmptyClass(f"cutpoint {cutpoint:g} leaves {empty} empty")
    method = ThresholdMethod.parse(method) if method is not None else None
    spec = DiscretizationSpec(method=method, cutpoint=float(cutpoint), labels=labels)
    logger.info("discretized at %g (%s): %s", cutpoint, spec.method_name, spec.class_counts)
    return spec


def window_mask(target: np.ndarray, cutpoint: float, x_pct: float) -> np.ndarray:
    """Rows strictly inside ``cutpoint +/- |cutpoint| * x / 100``."""
    half = abs(cutpoint) * x_pct / 100.0
    target = np.asarray(target)
    return (target > cutpoint - half) & (target < cutpoint + half)


def remove_window(
    dataset: Dataset, labels: np.ndarray, cutpoint: float, x_pct: float
) -> Tuple[Dataset, np.ndarray]:
    """Drop rows inside the open window; ``x_pct = 0`` is the identity."""
    if x_pct < 0:
        raise ValueError("x_pct must be non-negative")
    keep = ~window_mask(dataset.target, cutpoint, x_pct)
    return dataset.subset(np.flatnonzero(keep)), np.asarray(labels)[keep]


def step_grid(step_size_pct: float, limit_pct: float = 100.0) -> List[float]:
    """``step, 2*step, ...`` up to ``limit_pct`` (arithmetic increments)."""
    if not 0 < step_size_pct <= 100:
        raise ConfigError("step_size_pct must be in (0, 100]")
    count = int(np.floor(limit_pct / step_size_pct + 1e-9))
    return [round(step_size_pct * k, 10) for k in range(1, count + 1)]


def _no_noisy_area(cutpoint: float, step: float, flags: Sequence[str], per_step=()) -> NoisyAreaSpec:
    return NoisyAreaSpec(
        cutpoint=cutpoint,
        step_size_pct=step,
        limit_pct=None,
        lower=cutpoint,
        upper=cutpoint,
        noisy_fraction=0.0,
        per_step_nonlinearity=tuple(per_step),
        flags=tuple(flags),
    )


def _noisy_area(cutpoint: float, step: float, limit: float, target: np.ndarray, **extra) -> NoisyAreaSpec:
    lower = max(cutpoint - cutpoint * limit / 100.0, 0.0)
    upper = cutpoint + cutpoint * limit / 100.0
    inside = (target > lower) & (target < upper)
    return NoisyAreaSpec(
        cutpoint=cutpoint,
        step_size_pct=step,
        limit_pct=float(limit),
        lower=lower,
        upper=upper,
        noisy_fraction=float(np.mean(inside)),
        **extra,
    )


def estimate_noisy_area(
    dataset: Dataset,
    cutpoint: float,
    step_size_pct: float,
    seed: int = 0,
    jobs: int = 1,
) -> NoisyAreaSpec:
    """Pick the window half-width (in % of the cutpoint) whose data has the highest N4.

    Candidate windows are ``cutpoint +/- cutpoint * x / 100`` for x = step,
    2*step, ..., 100. Windows with fewer than two points of either class are
    skipped; ties keep the smallest x.
    """
    steps = step_grid(step_size_pct)
    if cutpoint <= 0:
        logger.warning("cutpoint %g is not positive; no noisy area can be estimated", cutpoint)
        return _no_noisy_area(cutpoint, step_size_pct, ["non_positive_cutpoint"])
    target = dataset.target
    labels = assign_labels(target, cutpoint)
    if not window_mask(target, cutpoint, 100.0).any():
        logger.warning("no data points within the candidate noisy area around %g", cutpoint)
        return _no_noisy_area(cutpoint, step_size_pct, ["empty_candidate_band"])

    def _evaluate(index_and_x: Tuple[int, float]) -> Optional[float]:
        index, x = index_and_x
        inside = window_mask(target, cutpoint, x)
        window_labels = labels[inside]
        if min(np.sum(window_labels == CLASS1), np.sum(window_labels == CLASS2)) < MIN_WINDOW_CLASS:
            return None
        return nonlinearity_n4(dataset.features[inside], window_labels, utils.derive_seed(seed, index))

    scores = utils.parallel_map(_evaluate, list(enumerate(steps)), jobs)
    per_step = tuple((x, score) for x, score in zip(steps, scores) if score is not None)
    if not per_step:
        logger.warning("every candidate window around %g has fewer than two points of a class", cutpoint)
        return _no_noisy_area(cutpoint, step_size_pct, ["windows_too_small"])
    best = max(range(len(per_step)), key=lambda i: (per_step[i][1], -i))
    limit = per_step[best][0]
    spec = _noisy_area(cutpoint, step_size_pct, limit, target, per_step_nonlinearity=per_step)
    logger.info("noisy area limit %g%% (N4 %.3f), %.1f%% of rows", limit, per_step[best][1], 100 * spec.noisy_fraction)
    return spec


def expert_noisy_area(dataset: Dataset, cutpoint: float, limit_pct: float, step_size_pct: float) -> NoisyAreaSpec:
    """Noisy area from a domain-expert limit instead of the N4 search."""
    if not 0 < limit_pct <= 100:
        raise ConfigError("limit must be in (0, 100]")
    if cutpoint <= 0:
        return _no_noisy_area(cutpoint, step_size_pct, ["non_positive_cutpoint"])
    return _noisy_area(cutpoint, step_size_pct, limit_pct, dataset.target, source="expert")


def extremes(dataset: Dataset, fraction: float = DEFAULT_EXTREMES_FRACTION) -> ExtremesSpec:
    """Bottom and top ``floor(fraction * N)`` rows by target; ties go to the lower row index."""
    if not 0 < fraction < 0.5:
        raise ConfigError("extremes fraction must be in (0, 0.5)")
    n = dataset.n
    m = int(np.floor(fraction * n + 1e-9))
    index = np.arange(n)
    ascending = np.lexsort((index, dataset.target))
    descending = np.lexsort((index, -dataset.target))
    low = ascending[:m]
    taken = np.zeros(n, dtype=bool)
    taken[low] = True
    high = descending[~taken[descending]][:m]
    return ExtremesSpec(fraction=fraction, low_indices=np.sort(low), high_indices=np.sort(high))


@dataclass(frozen=True)
class DiscretizationSummary:
    """One row of the threshold/limit/noisy-area table."""

    method: str
    threshold: Optional[float]
    noisy_pct: Optional[float]
    limit_pct: Optional[float]
    step_size_pct: float
    extremes_n: int
    noisy_n: int
    error: Optional[str] = None

    def to_dict(self) -> Dict:
        return {
            "method": self.method,
            "threshold": self.threshold,
            "noisy_pct": self.noisy_pct,
            "limit": self.limit_pct,
            "step_size": self.step_size_pct,
            "extremes_n": self.extremes_n,
            "noisy_n": self.noisy_n,
            "error": self.error,
        }


def summarize(
    dataset: Dataset,
    method: str,
    cutpoint: float,
    noisy: NoisyAreaSpec,
    extremes_spec: ExtremesSpec,
) -> DiscretizationSummary:
    noisy_n = int(noisy.mask(dataset.target).sum())
    return DiscretizationSummary(
        method=method,
        threshold=cutpoint,
        noisy_pct=100.0 * noisy.noisy_fraction if noisy.found else None,
        limit_pct=noisy.limit_pct,
        step_size_pct=noisy.step_size_pct,
        extremes_n=int(extremes_spec.indices.size),
        noisy_n=noisy_n,
    )
