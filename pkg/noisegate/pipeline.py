"""Incremental noise removal, its impact on performance and interpretation,
and the extremes / noisy-area experiments.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import evalstats, learners, utils
from .dataio import Dataset
from .discretize import DiscretizationSpec, ExtremesSpec, NoisyAreaSpec, remove_window, step_grid
from .errors import DataError, EmptyExtremes, InfeasibleAnalysis

logger = logging.getLogger(__name__)

OVERSAMPLE_STREAM = 4
NOISY_TO_EXTREMES_STREAM = 5
DEFAULT_OVERSAMPLE_PCTS = (0, 100, 200, 300)
USE_WHOLE_DATASET = "use whole dataset"


@dataclass(frozen=True)
class IncrementalPoint:
    x_pct: float
    retained_n: int
    boot: Optional[evalstats.BootstrapResult]
    reason: Optional[str] = None

    @property
    def feasible(self) -> bool:
        return self.boot is not None


def window_steps(noisy: NoisyAreaSpec) -> List[float]:
    """0, step, 2*step, ... up to the limit (the limit itself always included)."""
    if not noisy.found:
        return [0.0]
    xs = step_grid(noisy.step_size_pct, noisy.limit_pct)
    if not xs or xs[-1] < noisy.limit_pct:
        xs.append(float(noisy.limit_pct))
    return [0.0] + xs


def incremental_analysis(
    dataset: Dataset,
    spec: DiscretizationSpec,
    noisy: NoisyAreaSpec,
    kind: "str | learners.ClassifierKind",
    n_boot: int = evalstats.DEFAULT_N_BOOT,
    seed: int = 0,
    grid: Optional[learners.TuningGrid] = None,
    reuse_x0_params: bool = False,
    jobs: int = 1,
) -> List[IncrementalPoint]:
    """Bootstrap-validate the classifier on the data left after removing each window."""
    kind = learners.ClassifierKind.parse(kind)
    points: List[IncrementalPoint] = []
    base_params: Optional[Dict[str, Any]] = None
    for x in window_steps(noisy):
        reduced, labels = remove_window(dataset, spec.labels, spec.cutpoint, x)
        try:
            learners.check_two_classes(labels)
            boot = evalstats.bootstrap_validate(
                kind,
                reduced,
                labels,
                n_boot=n_boot,
                seed=seed,
                hyper_params=base_params if reuse_x0_params and x > 0 else None,
                grid=grid,
                jobs=jobs,
            )
        except DataError as exc:
            if x == 0:
                raise
            logger.warning("%s: x=%g%% is infeasible: %s", kind.value, x, exc)
            points.append(IncrementalPoint(x_pct=x, retained_n=reduced.n, boot=None, reason=str(exc)))
            continue
        if x == 0:
            base_params = boot.hyper_params
        logger.info("%s: x=%g%% retained %d rows, median AUC %.4f", kind.value, x, reduced.n, boot.median("auc"))
        points.append(IncrementalPoint(x_pct=x, retained_n=reduced.n, boot=boot))
    return points


@dataclass(frozen=True)
class PerformanceImpact:
    measure: str
    magnitude_pct: Optional[float]
    x_first: float
    p_value: float
    cohens_d: float
    effect_label: str
    median_at_0: float
    median_at_limit: float
    per_x: Tuple[Tuple[float, evalstats.StatTestResult, float], ...] = ()
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def improved_at(self, x: float) -> bool:
        """Significant, non-negligible change at ``x`` in the better direction."""
        for x_pct, test, median in self.per_x:
            if x_pct == x:
                if not test.significant:
                    return False
                if self.measure in evalstats.LOWER_IS_BETTER:
                    return median < self.median_at_0
                return median > self.median_at_0
        return False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "measure": self.measure,
            "magnitude_pct": self.magnitude_pct,
            "x_first": self.x_first,
            "p_value": self.p_value,
            "cohens_d": self.cohens_d,
            "effect_label": self.effect_label,
            "median_at_0": self.median_at_0,
            "median_at_limit": self.median_at_limit,
            "per_x": [
                {"x_pct": x, "median": median, **test.to_dict()} for x, test, median in self.per_x
            ],
            "flags": list(self.flags),
        }


def _feasible(points: Sequence[IncrementalPoint]) -> List[IncrementalPoint]:
    return [point for point in points if point.feasible]


def performance_impact(
    points: Sequence[IncrementalPoint],
    measures: Sequence[str] = evalstats.MEASURES,
) -> List[PerformanceImpact]:
    """Compare every x > 0 against the x = 0 bootstrap, paired by iteration.

    Returns an empty list when fewer than two feasible points exist.
    """
    feasible = _feasible(points)
    if len(feasible) < 2 or feasible[0].x_pct != 0:
        return []
    base, last = feasible[0].boot, feasible[-1].boot
    impacts = []
    for measure in measures:
        at_0 = base.measure(measure)
        per_x = []
        for point in feasible[1:]:
            values = point.boot.measure(measure)
            per_x.append((point.x_pct, evalstats.compare_paired(values, at_0), float(np.median(values))))
        x_first = next((x for x, test, _ in per_x if test.significant), 0.0)
        median_0, median_limit = float(np.median(at_0)), last.median(measure)
        flags: List[str] = []
        if median_0 == 0:
            magnitude = None
            flags.append("zero_baseline_median")
        else:
            magnitude = 100.0 * (median_limit - median_0) / abs(median_0)
            if measure in evalstats.LOWER_IS_BETTER:
                magnitude = -magnitude
        if points[-1].x_pct != feasible[-1].x_pct:
            flags.append("limit_infeasible")
        final = per_x[-1][1]
        impacts.append(
            PerformanceImpact(
                measure=measure,
                magnitude_pct=magnitude,
                x_first=float(x_first),
                p_value=final.p_value,
                cohens_d=final.cohens_d,
                effect_label=final.effect_label,
                median_at_0=median_0,
                median_at_limit=median_limit,
                per_x=tuple(per_x),
                flags=tuple(flags + list(final.flags)),
            )
        )
    return impacts


@dataclass(frozen=True)
class Recommendation:
    action: str
    x_pct: float
    measure: Optional[str] = None
    caution_ranks: Tuple[int, ...] = ()

    @property
    def text(self) -> str:
        message = USE_WHOLE_DATASET if self.x_pct == 0 else f"discard {self.x_pct:g}% around the cutpoint"
        if self.caution_ranks:
            ranks = ", ".join(str(rank) for rank in self.caution_ranks)
            message += f"; interpret feature ranks {ranks} with caution"
        return message

    def to_dict(self) -> Dict[str, Any]:
        return {
            "action": self.action,
            "x_pct": self.x_pct,
            "measure": self.measure,
            "caution_ranks": list(self.caution_ranks),
            "text": self.text,
        }


def recommend(
    impacts: Sequence[PerformanceImpact],
    measure: Optional[str] = None,
    interpretation: Optional["InterpretationImpact"] = None,
) -> Recommendation:
    """Discard the window that significantly improves the chosen measure most.

    With no measure chosen, the x improving the most measures wins (ties go
    to the smaller x). Without any significant improvement the whole dataset
    is kept.
    """
    caution = interpretation.caution_ranks if interpretation is not None else ()
    if measure is not None and measure not in evalstats.MEASURES:
        raise ValueError(f"unknown measure {measure!r}")
    chosen = [impact for impact in impacts if measure is None or impact.measure == measure]
    if measure is not None:
        for impact in chosen:
            better = [(x, median) for x, _, median in impact.per_x if impact.improved_at(x)]
            if better:
                pick = min if measure in evalstats.LOWER_IS_BETTER else max
                x_best = pick(better, key=lambda item: item[1])[0]
                return Recommendation("discard", x_best, measure, caution)
        return Recommendation("keep", 0.0, measure, caution)

    counts: Dict[float, int] = {}
    for impact in chosen:
        for x, _, _ in impact.per_x:
            if impact.improved_at(x):
                counts[x] = counts.get(x, 0) + 1
    if not counts:
        return Recommendation("keep", 0.0, None, caution)
    x_best = min(counts, key=lambda x: (-counts[x], x))
    return Recommendation("discard", x_best, None, caution)


@dataclass(frozen=True)
class InterpretationImpact:
    overall: evalstats.StatTestResult
    rank_shift: Dict[int, float]
    ranks_at_0: Dict[str, int]
    ranks_at_limit: Dict[str, int]
    differences: Dict[str, int]
    x_limit: float
    absolute: bool = False

    @property
    def overall_p(self) -> float:
        return self.overall.p_value

    @property
    def overall_d(self) -> float:
        return self.overall.cohens_d

    @property
    def caution_ranks(self) -> Tuple[int, ...]:
        return tuple(rank for rank, value in sorted(self.rank_shift.items()) if value > 0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "overall_p": self.overall_p,
            "overall_statistic": self.overall.statistic,
            "overall_d": self.overall_d,
            "effect_label": self.overall.effect_label,
            "rank_shift": {str(rank): value for rank, value in self.rank_shift.items()},
            "ranks_at_0": self.ranks_at_0,
            "ranks_at_limit": self.ranks_at_limit,
            "differences": self.differences,
            "x_limit": self.x_limit,
            "absolute": self.absolute,
            "flags": list(self.overall.flags),
        }


def compare_ranks(
    ranks_at_0: Dict[str, int],
    ranks_at_limit: Dict[str, int],
    absolute: bool = False,
) -> Tuple[Dict[str, int], evalstats.StatTestResult]:
    """Per-feature rank differences tested against all-zero differences."""
    names = list(ranks_at_0)
    diffs = np.array([ranks_at_0[name] - ranks_at_limit[name] for name in names], dtype=float)
    if absolute:
        diffs = np.abs(diffs)
    test = evalstats.wilcoxon_signed_rank(diffs, np.zeros_like(diffs))
    d, capped = evalstats.cohens_d_one_sample_flagged(diffs) if diffs.size >= 2 else (0.0, False)
    result = evalstats.StatTestResult(
        p_value=test.p_value,
        statistic=test.statistic,
        cohens_d=d,
        effect_label=evalstats.effect_label(d),
        flags=("cohens_d_capped",) if capped else (),
    )
    return {name: int(diff) for name, diff in zip(names, diffs)}, result


def interpretation_impact(
    points: Sequence[IncrementalPoint],
    top_k: int = 3,
    n_rep: int = 100,
    seed: int = 0,
    absolute: bool = False,
    jobs: int = 1,
) -> InterpretationImpact:
    """Scott-Knott ESD ranks at x = 0 against those at the (last feasible) limit."""
    feasible = _feasible(points)
    if len(feasible) < 2 or feasible[0].x_pct != 0:
        raise InfeasibleAnalysis("interpretation impact needs feasible points at x = 0 and x > 0")
    base, last = feasible[0].boot, feasible[-1].boot
    differences, overall = compare_ranks(base.sk_ranks, last.sk_ranks, absolute)
    rank_shift = evalstats.rank_shift_likelihood(
        [base.rank_lists(), last.rank_lists()], n_rep=n_rep, top_k=top_k, seed=seed, jobs=jobs
    )
    logger.info("rank difference test p=%.4g d=%.3f; top-%d shift %s", overall.p_value, overall.cohens_d, top_k, rank_shift)
    return InterpretationImpact(
        overall=overall,
        rank_shift=rank_shift,
        ranks_at_0=dict(base.sk_ranks),
        ranks_at_limit=dict(last.sk_ranks),
        differences=differences,
        x_limit=feasible[-1].x_pct,
        absolute=absolute,
    )


@dataclass(frozen=True)
class OversampleConfig:
    over_sample_pcts: Tuple[int, ...] = DEFAULT_OVERSAMPLE_PCTS

    def __post_init__(self) -> None:
        pcts = tuple(int(pct) for pct in self.over_sample_pcts)
        if not pcts or any(pct < 0 for pct in pcts):
            raise ValueError("over_sample_pcts must be non-negative integers")
        object.__setattr__(self, "over_sample_pcts", pcts)


@dataclass(frozen=True)
class OversampleRow:
    over_sample_pct: int
    train_n: int
    noisy_share: float
    median_auc: float
    delta_auc: float
    aucs: Tuple[float, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "over_sample_pct": self.over_sample_pct,
            "train_n": self.train_n,
            "noisy_share": self.noisy_share,
            "median_auc": self.median_auc,
            "delta_auc": self.delta_auc,
        }


@dataclass(frozen=True)
class OversampleResult:
    kind: learners.ClassifierKind
    rows: Tuple[OversampleRow, ...]
    rank_shift: Dict[int, float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "classifier": self.kind.value,
            "rows": [row.to_dict() for row in self.rows],
            "rank_shift": {str(rank): value for rank, value in self.rank_shift.items()},
        }


def _extremes_and_noisy(
    dataset: Dataset, spec: DiscretizationSpec, noisy: NoisyAreaSpec, extremes_spec: ExtremesSpec
) -> Tuple[np.ndarray, np.ndarray]:
    ext_idx = extremes_spec.indices
    if ext_idx.size == 0:
        raise EmptyExtremes("the extremes hold no rows")
    if np.unique(spec.labels[ext_idx]).size < 2:
        raise EmptyExtremes("the extremes hold a single class")
    noisy_mask = noisy.mask(dataset.target)
    noisy_mask[ext_idx] = False
    noisy_idx = np.flatnonzero(noisy_mask)
    if noisy_idx.size == 0:
        raise InfeasibleAnalysis("the noisy area holds no rows outside the extremes")
    return ext_idx, noisy_idx


def oversample_experiment(
    dataset: Dataset,
    spec: DiscretizationSpec,
    noisy: NoisyAreaSpec,
    extremes_spec: ExtremesSpec,
    kind: "str | learners.ClassifierKind",
    cfg: OversampleConfig = OversampleConfig(),
    n_boot: int = evalstats.DEFAULT_N_BOOT,
    seed: int = 0,
    grid: Optional[learners.TuningGrid] = None,
    top_k: int = 3,
    n_rep: int = 100,
    jobs: int = 1,
) -> OversampleResult:
    """Train on bootstrap-drawn extremes plus the noisy area oversampled by pct%; test on held-out extremes.

    Each configuration reuses the same extremes draws per iteration; the extra
    noisy rows are drawn uniformly with replacement from the noisy area.
    Hyper-parameters are tuned on each iteration's training rows.
    """
    kind = learners.ClassifierKind.parse(kind)
    labels = np.asarray(spec.labels).astype(int)
    ext_idx, noisy_idx = _extremes_and_noisy(dataset, spec, noisy, extremes_spec)
    features = dataset.features
    grid = grid or learners.TuningGrid.default(dataset.p)

    def _configuration(pct: int):
        extra = int(round(pct / 100.0 * noisy_idx.size))

        def _iteration(b: int):
            rng = utils.substream(seed, OVERSAMPLE_STREAM, b)
            train_pos, test_pos, _ = learners.out_of_sample_split(rng, labels[ext_idx])
            extra_rows = utils.substream(seed, OVERSAMPLE_STREAM, b, pct).choice(noisy_idx, size=extra, replace=True)
            train_idx = np.concatenate([ext_idx[train_pos], noisy_idx, extra_rows])
            test_idx = ext_idx[test_pos]
            params = learners.tune(
                kind, features[train_idx], labels[train_idx], grid,
                utils.derive_seed(seed, OVERSAMPLE_STREAM, b, pct, learners.TUNE_STREAM),
            )
            model = learners.train(
                kind, features[train_idx], labels[train_idx], params,
                utils.derive_seed(seed, OVERSAMPLE_STREAM, b), dataset.feature_names,
            )
            auc = evalstats.auc_score(labels[test_idx], learners.predict_proba(model, features[test_idx]))
            return auc, evalstats.importance_ranks(learners.feature_importance(model))

        results = utils.parallel_map(_iteration, range(n_boot), jobs)
        aucs = tuple(float(item[0]) for item in results)
        ranks = np.vstack([item[1] for item in results])
        train_n = ext_idx.size + noisy_idx.size + extra
        share = (noisy_idx.size + extra) / train_n
        logger.info("%s oversample %d%%: %d rows (%.0f%% noisy), median AUC %.4f",
                    kind.value, pct, train_n, 100 * share, np.median(aucs))
        return train_n, share, aucs, ranks

    configurations = [(pct, _configuration(pct)) for pct in cfg.over_sample_pcts]
    base_auc = float(np.median(configurations[0][1][2]))
    rows = tuple(
        OversampleRow(
            over_sample_pct=pct,
            train_n=int(train_n),
            noisy_share=float(share),
            median_auc=float(np.median(aucs)),
            delta_auc=float(np.median(aucs)) - base_auc,
            aucs=aucs,
        )
        for pct, (train_n, share, aucs, _) in configurations
    )
    first_ranks, last_ranks = configurations[0][1][3], configurations[-1][1][3]
    rank_lists = [
        {name: ranks[:, j] for j, name in enumerate(dataset.feature_names)} for ranks in (first_ranks, last_ranks)
    ]
    rank_shift = evalstats.rank_shift_likelihood(rank_lists, n_rep=n_rep, top_k=top_k, seed=seed, jobs=jobs)
    return OversampleResult(kind=kind, rows=rows, rank_shift=rank_shift)


@dataclass(frozen=True)
class NoisyToExtremesResult:
    extremes_auc: float
    noisy_auc: float
    extremes_aucs: Tuple[float, ...]
    noisy_aucs: Tuple[float, ...]
    train_n: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "noisy_to_extremes_auc": self.extremes_auc,
            "noisy_to_noisy_auc": self.noisy_auc,
            "noisy_n": self.train_n,
        }


def noisy_to_extremes_experiment(
    dataset: Dataset,
    spec: DiscretizationSpec,
    noisy: NoisyAreaSpec,
    extremes_spec: ExtremesSpec,
    n_boot: int = evalstats.DEFAULT_N_BOOT,
    seed: int = 0,
    kind: "str | learners.ClassifierKind" = learners.ClassifierKind.RANDOM_FOREST,
    grid: Optional[learners.TuningGrid] = None,
    jobs: int = 1,
) -> NoisyToExtremesResult:
    """Classifiers bootstrapped on the noisy area, scored on the extremes and on held-out noisy rows."""
    kind = learners.ClassifierKind.parse(kind)
    labels = np.asarray(spec.labels).astype(int)
    ext_idx, noisy_idx = _extremes_and_noisy(dataset, spec, noisy, extremes_spec)
    features = dataset.features
    noisy_labels = labels[noisy_idx]
    learners.check_two_classes(noisy_labels)
    grid = grid or learners.TuningGrid.default(dataset.p)

    def _iteration(b: int) -> Tuple[float, float]:
        rng = utils.substream(seed, NOISY_TO_EXTREMES_STREAM, b)
        train_pos, test_pos, _ = learners.out_of_sample_split(rng, noisy_labels)
        train_idx = noisy_idx[train_pos]
        params = learners.tune(
            kind, features[train_idx], labels[train_idx], grid,
            utils.derive_seed(seed, NOISY_TO_EXTREMES_STREAM, b, learners.TUNE_STREAM),
        )
        model = learners.train(
            kind, features[train_idx], labels[train_idx], params,
            utils.derive_seed(seed, NOISY_TO_EXTREMES_STREAM, b), dataset.feature_names,
        )
        on_extremes = evalstats.auc_score(labels[ext_idx], learners.predict_proba(model, features[ext_idx]))
        test_idx = noisy_idx[test_pos]
        on_noisy = evalstats.auc_score(labels[test_idx], learners.predict_proba(model, features[test_idx]))
        return on_extremes, on_noisy

    results = utils.parallel_map(_iteration, range(n_boot), jobs)
    extremes_aucs = tuple(float(item[0]) for item in results)
    noisy_aucs = tuple(float(item[1]) for item in results)
    result = NoisyToExtremesResult(
        extremes_auc=float(np.median(extremes_aucs)),
        noisy_auc=float(np.median(noisy_aucs)),
        extremes_aucs=extremes_aucs,
        noisy_aucs=noisy_aucs,
        train_n=int(noisy_idx.size),
    )
    logger.info("noisy area -> extremes AUC %.4f, noisy -> noisy AUC %.4f", result.extremes_auc, result.noisy_auc)
    return result


@dataclass(frozen=True)
class ClassifierAnalysis:
    kind: learners.ClassifierKind
    points: Tuple[IncrementalPoint, ...]
    impacts: Tuple[PerformanceImpact, ...]
    interpretation: Optional[InterpretationImpact]
    recommendation: Recommendation

    @property
    def hyper_params(self) -> Dict[str, Any]:
        return dict(self.points[0].boot.hyper_params) if self.points and self.points[0].feasible else {}


def analyze_classifier(
    dataset: Dataset,
    spec: DiscretizationSpec,
    noisy: NoisyAreaSpec,
    kind: "str | learners.ClassifierKind",
    n_boot: int = evalstats.DEFAULT_N_BOOT,
    seed: int = 0,
    grid: Optional[learners.TuningGrid] = None,
    reuse_x0_params: bool = False,
    top_k: int = 3,
    n_rep: int = 100,
    absolute: bool = False,
    measure: Optional[str] = None,
    jobs: int = 1,
) -> ClassifierAnalysis:
    """Incremental analysis followed by its performance and interpretation impact."""
    kind = learners.ClassifierKind.parse(kind)
    points = incremental_analysis(dataset, spec, noisy, kind, n_boot, seed, grid, reuse_x0_params, jobs)
    impacts = performance_impact(points)
    interpretation = None
    if impacts:
        interpretation = interpretation_impact(points, top_k=top_k, n_rep=n_rep, seed=seed, absolute=absolute, jobs=jobs)
    recommendation = recommend(impacts, measure, interpretation)
    logger.info("%s: %s", kind.value, recommendation.text)
    return ClassifierAnalysis(
        kind=kind,
        points=tuple(points),
        impacts=tuple(impacts),
        interpretation=interpretation,
        recommendation=recommendation,
    )
