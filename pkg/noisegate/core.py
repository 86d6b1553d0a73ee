"""Command orchestration: each ``run_*`` function backs one CLI subcommand."""
from __future__ import annotations

import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

import pandas as pd

from . import complexity, dataio, discretize, learners, paths, pipeline, preprocess, report, synthetic, utils
from .config import RunConfig
from .errors import DataError, InfeasibleAnalysis

logger = logging.getLogger(__name__)

EXIT_OK = 0


def _out(stdout: Optional[TextIO]) -> TextIO:
    return stdout if stdout is not None else sys.stdout


@dataclass(frozen=True)
class PreparedData:
    dataset: dataio.Dataset
    reduction: preprocess.ReductionReport
    spec: discretize.DiscretizationSpec
    noisy: discretize.NoisyAreaSpec
    extremes: discretize.ExtremesSpec
    summary: discretize.DiscretizationSummary


def load_dataset(cfg: RunConfig) -> dataio.Dataset:
    if not cfg.input_path:
        raise DataError("no input file given (--input)")
    return dataio.load_csv(cfg.input_path, cfg.target)


def find_noisy_area(cfg: RunConfig, dataset: dataio.Dataset, cutpoint: float) -> discretize.NoisyAreaSpec:
    if cfg.limit_pct is not None:
        logger.info("using the expert noisy-area limit %g%%", cfg.limit_pct)
        return discretize.expert_noisy_area(dataset, cutpoint, cfg.limit_pct, cfg.step_size_pct)
    return discretize.estimate_noisy_area(dataset, cutpoint, cfg.step_size_pct, seed=cfg.seed, jobs=cfg.jobs)


def prepare(cfg: RunConfig) -> PreparedData:
    """Load, reduce features, discretize and locate the noisy area and extremes."""
    raw = load_dataset(cfg)
    dataset, reduction = preprocess.reduce_features(raw, cfg.rho_threshold, cfg.r2_threshold)
    if cfg.cutpoint is not None:
        spec = discretize.discretize(dataset, cfg.cutpoint)
    else:
        cutpoint = discretize.compute_threshold(cfg.threshold_method, dataset.target)
        spec = discretize.discretize(dataset, cutpoint, cfg.threshold_method)
    noisy = find_noisy_area(cfg, dataset, spec.cutpoint)
    extremes = discretize.extremes(dataset, cfg.extremes_fraction)
    summary = discretize.summarize(dataset, spec.method_name, spec.cutpoint, noisy, extremes)
    return PreparedData(dataset, reduction, spec, noisy, extremes, summary)


def tuning_grid(cfg: RunConfig, dataset: dataio.Dataset) -> learners.TuningGrid:
    return learners.TuningGrid.default(dataset.p, cfg.inner_bootstraps)


def run_analyze(cfg: RunConfig, stdout: Optional[TextIO] = None) -> int:
    """Full workflow; writes report.json, perf_curves.csv, ranks.csv and summary.txt."""
    data = prepare(cfg)
    grid = tuning_grid(cfg, data.dataset)
    analyses = []
    for kind in cfg.classifiers:
        logger.info("analysing %s", kind.value)
        analyses.append(
            pipeline.analyze_classifier(
                data.dataset,
                data.spec,
                data.noisy,
                kind,
                n_boot=cfg.n_boot,
                seed=cfg.seed,
                grid=grid,
                reuse_x0_params=cfg.reuse_x0_params,
                top_k=cfg.top_k,
                n_rep=cfg.n_rep,
                absolute=cfg.absolute_rank_diff,
                measure=cfg.measure,
                jobs=cfg.jobs,
            )
        )
    document = report.build_report(
        config_echo=cfg.to_dict(),
        seed=cfg.seed,
        dataset=data.dataset,
        target=cfg.target,
        reduction=data.reduction,
        spec=data.spec,
        noisy=data.noisy,
        summary=data.summary,
        analyses=analyses,
    )
    out = paths.get_output_dir(cfg.output_dir)
    utils.dump_json(out / paths.REPORT_FILE, document)
    report.write_frame(report.perf_curves_frame(analyses), out / paths.PERF_CURVES_FILE)
    report.write_frame(report.ranks_frame(analyses), out / paths.RANKS_FILE)
    text = report.summary_text(document)
    (out / paths.SUMMARY_FILE).write_text(text, encoding="utf-8")
    _out(stdout).write(text)
    logger.info("wrote analysis to %s", out)
    if document["status"] != "ok":
        logger.error("analysis infeasible: %s", document["status"])
        return InfeasibleAnalysis.exit_code
    return EXIT_OK


def run_discretize(cfg: RunConfig, stdout: Optional[TextIO] = None) -> int:
    """Threshold, limit and noisy-area share for every threshold method."""
    raw = load_dataset(cfg)
    dataset, _ = preprocess.reduce_features(raw, cfg.rho_threshold, cfg.r2_threshold)
    extremes = discretize.extremes(dataset, cfg.extremes_fraction)
    candidates: List[tuple] = [(method.value, method) for method in discretize.ThresholdMethod]
    if cfg.cutpoint is not None:
        candidates.append(("expert", None))
    summaries = []
    for name, method in candidates:
        try:
            cutpoint = cfg.cutpoint if method is None else discretize.compute_threshold(method, dataset.target)
            discretize.discretize(dataset, cutpoint, method)
            noisy = find_noisy_area(cfg, dataset, cutpoint)
            summaries.append(discretize.summarize(dataset, name, cutpoint, noisy, extremes))
        except DataError as exc:
            logger.warning("%s threshold failed: %s", name, exc)
            summaries.append(discretize.DiscretizationSummary(
                method=name, threshold=None, noisy_pct=None, limit_pct=None,
                step_size_pct=cfg.step_size_pct, extremes_n=int(extremes.indices.size), noisy_n=0, error=str(exc),
            ))
    frame = report.discretization_frame(summaries)
    report.write_frame(frame, paths.output_file(paths.DISCRETIZATION_FILE, cfg.output_dir))
    rows = [[summary.to_dict()[column] for column in report.DISCRETIZATION_COLUMNS] for summary in summaries]
    _out(stdout).write(utils.format_table(report.DISCRETIZATION_COLUMNS, rows) + "\n")
    return EXIT_OK


def run_complexity(cfg: RunConfig, stdout: Optional[TextIO] = None) -> int:
    """Complexity measures per Box-Cox quantum of each class."""
    raw = load_dataset(cfg)
    dataset, _ = preprocess.reduce_features(raw, cfg.rho_threshold, cfg.r2_threshold)
    if cfg.cutpoint is not None:
        spec = discretize.discretize(dataset, cfg.cutpoint)
    else:
        spec = discretize.discretize(
            dataset, discretize.compute_threshold(cfg.threshold_method, dataset.target), cfg.threshold_method
        )
    quanta = dataio.bin_into_quanta(dataset, spec.labels, cfg.n_bins)
    profile = complexity.quanta_profile(dataset, spec.labels, quanta, seed=cfg.seed, jobs=cfg.jobs)
    name = Path(cfg.input_path).stem
    rows = [
        {"dataset": name, "bin": b, "measure": measure, "value": value}
        for b, result in profile
        for measure, value in result.as_dict().items()
    ]
    measures = pd.DataFrame(rows, columns=["dataset", "bin", "measure", "value"])
    counts = pd.DataFrame(
        [{"bin": b, "class": cls, "count": count} for (b, cls), count in quanta.counts(spec.labels).items()],
        columns=["bin", "class", "count"],
    )
    report.write_frame(measures, paths.output_file(paths.COMPLEXITY_FILE, cfg.output_dir))
    report.write_frame(counts, paths.output_file(paths.QUANTA_FILE, cfg.output_dir))
    table = [[b, result.n_points] + [result.as_dict()[m] for m in complexity.MEASURES] + [",".join(result.flags)]
             for b, result in profile]
    _out(stdout).write(utils.format_table(["bin", "n"] + list(complexity.MEASURES) + ["flags"], table) + "\n")
    return EXIT_OK


def run_experiment(cfg: RunConfig, which: str = "all", stdout: Optional[TextIO] = None) -> int:
    """Oversampling and noisy-area-to-extremes experiments."""
    data = prepare(cfg)
    out = paths.get_output_dir(cfg.output_dir)
    results: Dict[str, Any] = {"seed": cfg.seed, "config_echo": cfg.to_dict(), "discretization": data.summary.to_dict()}
    if not data.noisy.found:
        results["status"] = "no_noisy_area"
        utils.dump_json(out / paths.EXPERIMENTS_FILE, results)
        _out(stdout).write("no noisy area found; experiments need one (try --limit)\n")
        return InfeasibleAnalysis.exit_code
    grid = tuning_grid(cfg, data.dataset)

    if which in ("oversample", "all"):
        oversample_rows = []
        results["oversample"] = {}
        for kind in cfg.classifiers:
            result = pipeline.oversample_experiment(
                data.dataset, data.spec, data.noisy, data.extremes, kind,
                pipeline.OversampleConfig(cfg.over_sample_pcts),
                n_boot=cfg.n_boot, seed=cfg.seed, grid=grid, top_k=cfg.top_k, n_rep=cfg.n_rep, jobs=cfg.jobs,
            )
            results["oversample"][kind.value] = result.to_dict()
            oversample_rows.extend(
                {"classifier": kind.value, "over_sample_pct": row.over_sample_pct, "noisy_share": row.noisy_share,
                 "median_auc": row.median_auc, "delta_auc": row.delta_auc}
                for row in result.rows
            )
        frame = pd.DataFrame(oversample_rows, columns=["classifier", "over_sample_pct", "noisy_share", "median_auc", "delta_auc"])
        report.write_frame(frame, out / paths.OVERSAMPLE_FILE)
        _out(stdout).write(utils.format_table(list(frame.columns), frame.values.tolist()) + "\n")

    if which in ("noisy-to-extremes", "all"):
        result = pipeline.noisy_to_extremes_experiment(
            data.dataset, data.spec, data.noisy, data.extremes, n_boot=cfg.n_boot, seed=cfg.seed, grid=grid, jobs=cfg.jobs,
        )
        results["noisy_to_extremes"] = result.to_dict()
        frame = pd.DataFrame(
            [{"evaluation": "noisy_to_extremes", "median_auc": result.extremes_auc},
             {"evaluation": "noisy_to_noisy", "median_auc": result.noisy_auc}],
            columns=["evaluation", "median_auc"],
        )
        report.write_frame(frame, out / paths.NOISY_TO_EXTREMES_FILE)
        _out(stdout).write(utils.format_table(list(frame.columns), frame.values.tolist()) + "\n")

    results["status"] = "ok"
    utils.dump_json(out / paths.EXPERIMENTS_FILE, results)
    return EXIT_OK


def run_generate(
    output: Path,
    n: int = 2000,
    p: int = 5,
    noise_band_pct: float = 10.0,
    signal_strength: float = 1.0,
    seed: int = 0,
    stdout: Optional[TextIO] = None,
) -> int:
    dataset = synthetic.generate_synthetic(n, p, noise_band_pct, signal_strength, seed)
    path = dataio.write_csv(dataset, output, synthetic.TARGET_COLUMN)
    _out(stdout).write(f"wrote {dataset.n} rows to {path}\n")
    return EXIT_OK
