"""Performance measures, out-of-sample bootstrap and the statistical tests
used to compare bootstrap distributions and rank feature importances.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from . import learners, utils
from .dataio import CLASS1, CLASS2, Dataset
from .errors import DataError, LengthMismatch, UndefinedMetric

logger = logging.getLogger(__name__)

MEASURES = ("accuracy", "precision", "recall", "brier", "auc", "f_measure", "mcc")
LOWER_IS_BETTER = frozenset({"brier"})
ALPHA = 0.05
NEGLIGIBLE_D = 0.2
D_CAP = 10.0
EXACT_MAX_N = 12
DEFAULT_N_BOOT = 100
BOOT_STREAM = 2
RANK_SHIFT_STREAM = 3


@dataclass(frozen=True)
class PerfVector:
    accuracy: float
    precision: float
    recall: float
    brier: float
    auc: float
    f_measure: float
    mcc: float
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in MEASURES}


def auc_score(truth: np.ndarray, scores: np.ndarray) -> float:
    """Mann-Whitney AUC for class1 with half credit for tied scores."""
    truth = np.asarray(truth)
    scores = np.asarray(scores, dtype=float)
    positive = truth == CLASS1
    n_pos, n_neg = int(positive.sum()), int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetric("AUC is undefined when the truth holds a single class")
    ranks = stats.rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def perf_measures(true_labels: Sequence[int], predicted_probs: Sequence[float], cutoff: float = 0.5) -> PerfVector:
    truth = np.asarray(true_labels)
    probs = np.asarray(predicted_probs, dtype=float)
    if truth.shape != probs.shape:
        raise LengthMismatch(f"{truth.size} labels but {probs.size} probabilities")
    if probs.size and (probs.min() < 0 or probs.max() > 1):
        raise DataError("probabilities must lie in [0, 1]")
    auc = auc_score(truth, probs)

    actual = truth == CLASS1
    predicted = learners.predict_labels(probs, cutoff) == CLASS1
    tp = float(np.sum(actual & predicted))
    fp = float(np.sum(~actual & predicted))
    fn = float(np.sum(actual & ~predicted))
    tn = float(np.sum(~actual & ~predicted))
    flags: List[str] = []

    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    if tp + fp == 0:
        flags.append("precision_undefined")
    recall = tp / (tp + fn)
    if precision + recall > 0:
        f_measure = 2 * precision * recall / (precision + recall)
    else:
        f_measure = 0.0
        flags.append("f_measure_undefined")
    marginals = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if marginals > 0:
        mcc = (tp * tn - fp * fn) / np.sqrt(marginals)
    else:
        mcc = 0.0
        flags.append("mcc_undefined")
    return PerfVector(
        accuracy=(tp + tn) / truth.size,
        precision=precision,
        recall=recall,
        brier=float(np.mean((probs - actual.astype(float)) ** 2)),
        auc=auc,
        f_measure=f_measure,
        mcc=float(mcc),
        flags=tuple(flags),
    )


def effect_label(d: float) -> str:
    magnitude = abs(d)
    if magnitude <= 0.2:
        return "Negligible"
    if magnitude <= 0.5:
        return "Small"
    if magnitude <= 0.8:
        return "Medium"
    return "Large"


@dataclass(frozen=True)
class StatTestResult:
    p_value: float
    statistic: float
    cohens_d: float = 0.0
    effect_label: str = "Negligible"
    flags: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def significant(self) -> bool:
        """p <= 0.05 and a non-negligible effect."""
        return self.p_value <= ALPHA and self.effect_label != "Negligible"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p_value": self.p_value,
            "statistic": self.statistic,
            "cohens_d": self.cohens_d,
            "effect_label": self.effect_label,
            "flags": list(self.flags),
        }


def _exact_signed_rank_p(ranks: np.ndarray, observed: float) -> float:
    n = ranks.size
    signs = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    totals = signs @ ranks
    centre = ranks.sum() / 2.0
    extreme = np.abs(totals - centre) >= abs(observed - centre) - 1e-9
    return float(min(1.0, extreme.mean()))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> StatTestResult:
    """Two-sided paired signed-rank test; the statistic is the positive rank sum.

    Zero differences are dropped and tied |differences| share average ranks.
    Up to 12 non-zero pairs the p-value is exact (all sign assignments);
    beyond that a tie- and continuity-corrected normal approximation is used.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"paired samples differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("wilcoxon_signed_rank needs at least one pair")
    diffs = a - b
    diffs = diffs[diffs != 0]
    n = diffs.size
    if n == 0:
        return StatTestResult(p_value=1.0, statistic=0.0)
    ranks = stats.rankdata(np.abs(diffs))
    w_plus = float(ranks[diffs > 0].sum())
    if n <= EXACT_MAX_N:
        return StatTestResult(p_value=_exact_signed_rank_p(ranks, w_plus), statistic=w_plus)

    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    if variance <= 0:
        return StatTestResult(p_value=1.0, statistic=w_plus)
    z = max(abs(w_plus - mean) - 0.5, 0.0) / np.sqrt(variance)
    return StatTestResult(p_value=float(min(1.0, 2.0 * stats.norm.sf(z))), statistic=w_plus)


def _capped(mean_gap: float) -> Tuple[float, bool]:
    if mean_gap == 0:
        return 0.0, False
    return float(np.copysign(D_CAP, mean_gap)), True


def cohens_d_flagged(a: Sequence[float], b: Sequence[float]) -> Tuple[float, bool]:
    """Two-sample d with pooled (n-1 weighted) sd, and whether it was capped."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("cohens_d needs at least two values per sample")
    gap = float(a.mean() - b.mean())
    pooled = ((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / (a.size + b.size - 2)
    if pooled <= 0:
        return _capped(gap)
    d = gap / np.sqrt(pooled)
    if abs(d) > D_CAP:
        return float(np.copysign(D_CAP, d)), True
    return float(d), False


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float:
    return cohens_d_flagged(a, b)[0]


def cohens_d_one_sample_flagged(diffs: Sequence[float]) -> Tuple[float, bool]:
    diffs = np.asarray(diffs, dtype=float)
    if diffs.size < 2:
        raise ValueError("one-sample cohens_d needs at least two values")
    sd = diffs.std(ddof=1)
    if sd == 0:
        return _capped(float(diffs.mean()))
    d = float(diffs.mean() / sd)
    if abs(d) > D_CAP:
        return float(np.copysign(D_CAP, d)), True
    return d, False


def cohens_d_one_sample(diffs: Sequence[float]) -> float:
    """mean(diffs) / sd(diffs): the effect of a difference vector against zero."""
    return cohens_d_one_sample_flagged(diffs)[0]


def compare_paired(a: Sequence[float], b: Sequence[float]) -> StatTestResult:
    """Signed-rank test of ``a`` vs ``b`` with the two-sample d of ``a - b`` orientation."""
    test = wilcoxon_signed_rank(a, b)
    d, capped = cohens_d_flagged(a, b)
    return StatTestResult(
        p_value=test.p_value,
        statistic=test.statistic,
        cohens_d=d,
        effect_label=effect_label(d),
        flags=("cohens_d_capped",) if capped else (),
    )


def rank_sum_p(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney U) p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.unique(np.concatenate([a, b])).size == 1:
        return 1.0
    p = stats.mannwhitneyu(a, b, alternative="two-sided").pvalue
    return 1.0 if np.isnan(p) else float(p)


def distinct_groups(left: np.ndarray, right: np.ndarray) -> bool:
    """Split acceptance: significant rank-sum difference and a non-negligible effect."""
    return rank_sum_p(left, right) <= ALPHA and abs(cohens_d(left, right)) > NEGLIGIBLE_D


def _best_split(values: List[np.ndarray]) -> int:
    """Split position maximising the between-group sum of squares; ties keep the first."""
    pooled = np.concatenate(values)
    grand = pooled.mean()
    best, best_ss = 1, -np.inf
    for k in range(1, len(values)):
        left, right = np.concatenate(values[:k]), np.concatenate(values[k:])
        ss = left.size * (left.mean() - grand) ** 2 + right.size * (right.mean() - grand) ** 2
        if ss > best_ss + 1e-12:
            best, best_ss = k, ss
    return best


def _partition(values: List[np.ndarray]) -> List[int]:
    """Sizes of the accepted partitions of an ordered list of groups."""
    if len(values) < 2:
        return [len(values)]
    k = _best_split(values)
    if not distinct_groups(np.concatenate(values[:k]), np.concatenate(values[k:])):
        return [len(values)]
    return _partition(values[:k]) + _partition(values[k:])


def scott_knott_esd(groups: Mapping[str, Sequence[float]]) -> Dict[str, int]:
    """Rank groups into statistically distinct, non-negligibly different partitions.

    Rank 1 holds the highest means; ranks are contiguous.
    """
    if not groups:
        raise ValueError("scott_knott_esd needs at least one group")
    arrays = {}
    for name, values in groups.items():
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise ValueError(f"group {name!r} is empty")
        if values.size < 2:
            raise ValueError(f"group {name!r} needs at least two values")
        arrays[name] = values
    names = sorted(arrays, key=lambda name: -arrays[name].mean())
    sizes = _partition([arrays[name] for name in names])
    ranks: Dict[str, int] = {}
    start = 0
    for rank, size in enumerate(sizes, start=1):
        for name in names[start:start + size]:
            ranks[name] = rank
        start += size
    return {name: ranks[name] for name in groups}


@dataclass(frozen=True)
class BootstrapResult:
    kind: learners.ClassifierKind
    feature_names: Tuple[str, ...]
    perf: Tuple[PerfVector, ...]
    importance: np.ndarray
    iteration_ranks: np.ndarray
    sk_ranks: Dict[str, int]
    hyper_params: Dict[str, Any]
    test_sizes: Tuple[int, ...] = ()
    iteration_params: Tuple[Dict[str, Any], ...] = ()
    redraws: int = 0
    flags: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def n_boot(self) -> int:
        return len(self.perf)

    def measure(self, name: str) -> np.ndarray:
        if name not in MEASURES:
            raise KeyError(f"unknown measure {name!r}")
        return np.array([getattr(vector, name) for vector in self.perf])

    def median(self, name: str) -> float:
        return float(np.median(self.measure(name)))

    def rank_lists(self) -> Dict[str, np.ndarray]:
        """Per-feature ranks across iterations."""
        return {name: self.iteration_ranks[:, j] for j, name in enumerate(self.feature_names)}

    def median_ranks(self) -> Dict[str, float]:
        return {name: float(np.median(ranks)) for name, ranks in self.rank_lists().items()}


def modal_params(params: Sequence[Mapping[str, Any]]) -> Dict[str, Any]:
    """Most frequent parameter set; ties keep the first seen."""
    counts: Dict[Tuple, int] = {}
    first: Dict[Tuple, Dict[str, Any]] = {}
    for item in params:
        key = tuple(sorted(item.items()))
        counts[key] = counts.get(key, 0) + 1
        first.setdefault(key, dict(item))
    if not counts:
        return {}
    best = max(counts, key=lambda key: counts[key])
    return first[best]


def importance_ranks(importance: np.ndarray) -> np.ndarray:
    """Rank 1 for the largest importance; tied values share the best rank."""
    return stats.rankdata(-np.asarray(importance, dtype=float), method="min").astype(int)


def bootstrap_validate(
    kind: "str | learners.ClassifierKind",
    dataset: Dataset,
    labels: np.ndarray,
    n_boot: int = DEFAULT_N_BOOT,
    seed: int = 0,
    hyper_params: Optional[Dict[str, Any]] = None,
    grid: Optional[learners.TuningGrid] = None,
    jobs: int = 1,
) -> BootstrapResult:
    """Out-of-sample bootstrap: train on N rows drawn with replacement, test on the rest.

    Iteration ``b`` draws from ``substream(seed, BOOT_STREAM, b)`` so two
    datasets validated with the same seed are paired by iteration index.
    Unless ``hyper_params`` is given, each iteration tunes on its own training
    rows only. The reported ``hyper_params`` are the set chosen most often,
    ties going to the earliest iteration.
    """
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    kind = learners.ClassifierKind.parse(kind)
    labels = np.asarray(labels).astype(int)
    if labels.size != dataset.n:
        raise LengthMismatch(f"{labels.size} labels for {dataset.n} rows")
    learners.check_two_classes(labels)
    features = dataset.features
    fixed_params = None if hyper_params is None else dict(hyper_params)
    grid = grid or learners.TuningGrid.default(dataset.p)

    def _iteration(b: int):
        rng = utils.substream(seed, BOOT_STREAM, b)
        train_idx, test_idx, redraws = learners.out_of_sample_split(rng, labels)
        params = fixed_params
        if params is None:
            params = learners.tune(
                kind,
                features[train_idx],
                labels[train_idx],
                grid,
                utils.derive_seed(seed, BOOT_STREAM, b, learners.TUNE_STREAM),
            )
        model = learners.train(
            kind,
            features[train_idx],
            labels[train_idx],
            params,
            utils.derive_seed(seed, BOOT_STREAM, b),
            dataset.feature_names,
        )
        probs = learners.predict_proba(model, features[test_idx])
        return (
            perf_measures(labels[test_idx], probs),
            learners.feature_importance(model),
            test_idx.size,
            redraws,
            model.flags,
            params,
        )

    results = utils.parallel_map(_iteration, range(n_boot), jobs)
    perf = tuple(item[0] for item in results)
    importance = np.vstack([item[1] for item in results])
    iteration_ranks = np.vstack([importance_ranks(row) for row in importance])
    redraws = int(sum(item[3] for item in results))
    iteration_params = tuple(dict(item[5]) for item in results)
    flags = sorted({flag for item in results for flag in item[4]} | {flag for vector in perf for flag in vector.flags})
    if n_boot >= 2:
        sk_ranks = scott_knott_esd({name: importance[:, j] for j, name in enumerate(dataset.feature_names)})
    else:
        sk_ranks = {name: int(iteration_ranks[0, j]) for j, name in enumerate(dataset.feature_names)}
    if redraws:
        logger.debug("%s bootstrap needed %d redraws", kind.value, redraws)
    return BootstrapResult(
        kind=kind,
        feature_names=dataset.feature_names,
        perf=perf,
        importance=importance,
        iteration_ranks=iteration_ranks,
        sk_ranks=sk_ranks,
        hyper_params=modal_params(iteration_params),
        test_sizes=tuple(int(item[2]) for item in results),
        iteration_params=iteration_params,
        redraws=redraws,
        flags=tuple(flags),
    )


def rank_shift_likelihood(
    rank_lists: Sequence[Mapping[str, Sequence[float]]],
    n_rep: int = 100,
    top_k: int = 3,
    seed: int = 0,
    jobs: int = 1,
) -> Dict[int, float]:
    """Likelihood that the feature at nominal rank x lands elsewhere when re-ranked.

    Each feature's ranks are pooled across ``rank_lists``; its nominal rank is
    the median of the pool. Every repetition resamples each pool with
    replacement and re-ranks with Scott-Knott ESD (lower ranks are better).
    A rank no feature holds has no shifts to count and maps to 0.0.
    """
    if not rank_lists:
        raise ValueError("rank_shift_likelihood needs at least one rank list")
    if n_rep < 1:
        raise ValueError("n_rep must be >= 1")
    names = list(rank_lists[0])
    for ranks in rank_lists[1:]:
        if set(ranks) != set(names):
            raise ValueError("rank lists must cover the same features")
    pooled = {name: np.concatenate([np.asarray(ranks[name], dtype=float) for ranks in rank_lists]) for name in names}
    nominal = {name: float(np.median(values)) for name, values in pooled.items()}

    def _repetition(r: int) -> Dict[str, int]:
        rng = utils.substream(seed, RANK_SHIFT_STREAM, r)
        resampled = {name: -rng.choice(pooled[name], size=pooled[name].size, replace=True) for name in names}
        if any(values.size < 2 for values in resampled.values()):
            single = importance_ranks(np.array([resampled[name][0] for name in names]))
            return {name: int(single[i]) for i, name in enumerate(names)}
        return scott_knott_esd(resampled)

    repetitions = utils.parallel_map(_repetition, range(n_rep), jobs)
    likelihood: Dict[int, float] = {}
    for x in range(1, top_k + 1):
        holders = [name for name in names if nominal[name] == x]
        if not holders:
            likelihood[x] = 0.0
            continue
        shifted = [np.mean([ranks[name] != x for ranks in repetitions]) for name in holders]
        likelihood[x] = float(np.mean(shifted))
    logger.debug("rank-shift likelihoods: %s", likelihood)
    return likelihood
