"""Report assembly, schema validation and plot-data tables."""
from __future__ import annotations

import logging
from typing import Any, Dict, List, Mapping, Optional, Sequence

import jsonschema
import pandas as pd

from . import paths, utils
from .dataio import Dataset
from .discretize import DiscretizationSpec, DiscretizationSummary, NoisyAreaSpec
from .evalstats import MEASURES
from .pipeline import ClassifierAnalysis, IncrementalPoint
from .preprocess import ReductionReport

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "report.schema.json"
REPORT_VERSION = 1
SchemaError = jsonschema.ValidationError

PERF_COLUMNS = ["classifier", "x_pct", "iteration", "measure", "value"]
RANK_COLUMNS = ["classifier", "x_pct", "feature", "sk_rank", "median_iteration_rank"]
DISCRETIZATION_COLUMNS = ["method", "threshold", "noisy_pct", "limit", "step_size", "extremes_n", "noisy_n"]


def _load_schema(schema_filename: str) -> Dict:
    # JSON is a subset of YAML, so one loader serves both schema formats
    return utils.load_yaml(paths.get_schema_dir() / schema_filename)


def validate_document(document: Mapping[str, Any], schema_filename: str) -> None:
    """Raise ``SchemaError`` when ``document`` does not match the packaged schema."""
    schema = _load_schema(schema_filename)
    jsonschema.validate(instance=utils.to_builtin(dict(document)), schema=schema)


def point_to_dict(point: IncrementalPoint) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "x_pct": point.x_pct,
        "retained_n": point.retained_n,
        "feasible": point.feasible,
        "reason": point.reason,
    }
    if point.feasible:
        boot = point.boot
        out.update({
            "medians": {measure: boot.median(measure) for measure in MEASURES},
            "sk_ranks": dict(boot.sk_ranks),
            "redraws": boot.redraws,
            "flags": list(boot.flags),
        })
    return out


def classifier_section(analysis: ClassifierAnalysis) -> Dict[str, Any]:
    return {
        "hyper_params": analysis.hyper_params,
        "points": [point_to_dict(point) for point in analysis.points],
    }


def discretization_section(
    spec: DiscretizationSpec, noisy: NoisyAreaSpec, summary: DiscretizationSummary
) -> Dict[str, Any]:
    return {
        "method": spec.method_name,
        "threshold": spec.cutpoint,
        "limit": noisy.limit_pct,
        "noisy_pct": summary.noisy_pct,
        "step_size": noisy.step_size_pct,
        "extremes_n": summary.extremes_n,
        "noisy_n": summary.noisy_n,
        "class_counts": spec.class_counts,
    }


def build_report(
    *,
    config_echo: Mapping[str, Any],
    seed: int,
    dataset: Dataset,
    target: str,
    reduction: ReductionReport,
    spec: DiscretizationSpec,
    noisy: NoisyAreaSpec,
    summary: DiscretizationSummary,
    analyses: Sequence[ClassifierAnalysis],
    experiments: Optional[Mapping[str, Any]] = None,
    flags: Sequence[str] = (),
) -> Dict[str, Any]:
    """Schema-1 report; validated before it is returned."""
    if not noisy.found:
        status = "no_noisy_area"
    elif any(not analysis.impacts for analysis in analyses):
        status = "infeasible"
    else:
        status = "ok"
    impacts = [
        {"classifier": analysis.kind.value, **impact.to_dict()}
        for analysis in analyses
        for impact in analysis.impacts
    ]
    all_flags = set(flags) | set(reduction.flags) | set(noisy.flags)
    for analysis in analyses:
        for point in analysis.points:
            if point.feasible:
                all_flags.update(point.boot.flags)
            else:
                all_flags.add(f"infeasible_window:{analysis.kind.value}:{point.x_pct:g}")
    report = {
        "schema": REPORT_VERSION,
        "seed": int(seed),
        "status": status,
        "config_echo": dict(config_echo),
        "dataset": {"path": dataset.source_path, "target": target, "n": dataset.n, "p": dataset.p},
        "preprocessing": reduction.to_dict(),
        "discretization": discretization_section(spec, noisy, summary),
        "noisy_area": noisy.to_dict() if noisy.found else None,
        "performance_impacts": impacts,
        "interpretation": {
            analysis.kind.value: analysis.interpretation.to_dict() if analysis.interpretation else None
            for analysis in analyses
        },
        "recommendation": {analysis.kind.value: analysis.recommendation.to_dict() for analysis in analyses},
        "classifiers": {analysis.kind.value: classifier_section(analysis) for analysis in analyses},
        "experiments": dict(experiments or {}),
        "flags": sorted(all_flags),
    }
    report = utils.to_builtin(report)
    validate_document(report, REPORT_SCHEMA)
    return report


def perf_curves_frame(analyses: Sequence[ClassifierAnalysis]) -> pd.DataFrame:
    """Long format: one row per classifier, x, bootstrap iteration and measure."""
    rows: List[Dict[str, Any]] = []
    for analysis in analyses:
        for point in analysis.points:
            if not point.feasible:
                continue
            for iteration, vector in enumerate(point.boot.perf):
                for measure, value in vector.as_dict().items():
                    rows.append({
                        "classifier": analysis.kind.value,
                        "x_pct": point.x_pct,
                        "iteration": iteration,
                        "measure": measure,
                        "value": value,
                    })
    return pd.DataFrame(rows, columns=PERF_COLUMNS)


def ranks_frame(analyses: Sequence[ClassifierAnalysis]) -> pd.DataFrame:
    rows: List[Dict[str, Any]] = []
    for analysis in analyses:
        for point in analysis.points:
            if not point.feasible:
                continue
            medians = point.boot.median_ranks()
            for feature in point.boot.feature_names:
                rows.append({
                    "classifier": analysis.kind.value,
                    "x_pct": point.x_pct,
                    "feature": feature,
                    "sk_rank": point.boot.sk_ranks[feature],
                    "median_iteration_rank": medians[feature],
                })
    return pd.DataFrame(rows, columns=RANK_COLUMNS)


def discretization_frame(summaries: Sequence[DiscretizationSummary]) -> pd.DataFrame:
    rows = [
        {key: summary.to_dict()[key] for key in ("method", "threshold", "noisy_pct", "limit", "step_size", "extremes_n", "noisy_n")}
        for summary in summaries
    ]
    return pd.DataFrame(rows, columns=DISCRETIZATION_COLUMNS)


def write_frame(frame: pd.DataFrame, path) -> None:
    """CSV with ``*`` for missing values and full float precision."""
    frame.to_csv(path, index=False, na_rep="*", float_format="%.10g", lineterminator="\n")
    logger.debug("wrote %s (%d rows)", path, len(frame))


def summary_text(report: Mapping[str, Any]) -> str:
    """One-screen summary of an analysis report."""
    disc = report["discretization"]
    lines = [
        f"dataset: {report['dataset']['path']} (n={report['dataset']['n']}, p={report['dataset']['p']})",
        f"retained features: {', '.join(report['preprocessing']['retained'])}",
        utils.format_table(
            ["method", "threshold", "noisy %", "limit", "step", "extremes", "noisy"],
            [[disc["method"], disc["threshold"], disc["noisy_pct"], disc["limit"],
              disc["step_size"], disc["extremes_n"], disc["noisy_n"]]],
        ),
    ]
    if report["status"] == "no_noisy_area":
        lines.append("no noisy area found; nothing to discard")
    if report["performance_impacts"]:
        lines.append("")
        lines.append(utils.format_table(
            ["classifier", "measure", "magnitude %", "x first", "p", "d", "effect"],
            [[row["classifier"], row["measure"], row["magnitude_pct"], row["x_first"],
              row["p_value"], row["cohens_d"], row["effect_label"]] for row in report["performance_impacts"]],
        ))
    interpretation = [(name, value) for name, value in report["interpretation"].items() if value]
    if interpretation:
        lines.append("")
        ranks = sorted({rank for _, value in interpretation for rank in value["rank_shift"]}, key=int)
        lines.append(utils.format_table(
            ["classifier", "p", "d"] + [f"rank {rank}" for rank in ranks],
            [[name, value["overall_p"], value["overall_d"]] + [value["rank_shift"].get(rank) for rank in ranks]
             for name, value in interpretation],
        ))
    lines.append("")
    for name, recommendation in report["recommendation"].items():
        lines.append(f"{name}: {recommendation['text']}")
    return "\n".join(lines) + "\n"
