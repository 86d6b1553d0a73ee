"""Configuration handling for noisegate runs.

Precedence: CLI flags > config file (YAML or TOML) > ``NOISEGATE_SEED``
(seed only) > ``DEFAULT_CONFIG``.
"""
from __future__ import annotations

import copy
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from . import utils
from .discretize import ThresholdMethod
from .errors import ConfigError
from .learners import ClassifierKind

logger = logging.getLogger(__name__)

SEED_ENV = "NOISEGATE_SEED"
ALL_CLASSIFIERS = "all"

DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
    "input": {
        "path": "",
        "target": "y",
    },
    "discretization": {
        "threshold_method": "median",
        "cutpoint": None,
        "step_size": 5.0,
        "limit": None,
        "extremes": 0.10,
        "n_bins": 5,
    },
    "preprocess": {
        "rho_threshold": 0.7,
        "r2_threshold": 0.9,
    },
    "learner": {
        "classifier": "rf",
        "inner_bootstraps": 10,
        "reuse_x0_params": False,
    },
    "bootstrap": {
        "n_boot": 100,
        "measure": None,
    },
    "interpretation": {
        "top_k": 3,
        "n_rep": 100,
        "absolute_rank_diff": False,
    },
    "experiments": {
        "over_sample": [0, 100, 200, 300],
    },
    "output": {
        "dir": "noisegate-out",
    },
    "logging": {
        "level": "INFO",
    },
    "runtime": {
        "seed": 0,
        "jobs": 1,
    },
}


def merge_config(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Deep-merge ``override`` onto ``base``; ``None`` values in ``override`` are skipped."""
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge_config(merged[key], value)
        elif value is not None:
            merged[key] = copy.deepcopy(value)
    return merged


def validate_config(data: Mapping[str, Any]) -> None:
    from . import report

    try:
        report.validate_document(dict(data), "config_schema.yaml")
    except report.SchemaError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def load_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Defaults, then ``NOISEGATE_SEED``, then the file at ``path``, then ``overrides``."""
    data = copy.deepcopy(DEFAULT_CONFIG)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        try:
            data["runtime"]["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from None
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = utils.load_mapping(path)
        except Exception as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(loaded, Mapping):
            raise ConfigError(f"{path} must hold a mapping")
        validate_config(loaded)
        data = merge_config(data, loaded)
        logger.debug("loaded config file %s", path)
    if overrides:
        data = merge_config(data, overrides)
    validate_config(data)
    return data


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


@dataclass(frozen=True)
class RunConfig:
    input_path: str
    target: str
    threshold_method: ThresholdMethod
    cutpoint: Optional[float]
    step_size_pct: float
    limit_pct: Optional[float]
    extremes_fraction: float
    n_bins: int
    rho_threshold: float
    r2_threshold: float
    classifiers: Tuple[ClassifierKind, ...]
    inner_bootstraps: int
    reuse_x0_params: bool
    n_boot: int
    measure: Optional[str]
    top_k: int
    n_rep: int
    absolute_rank_diff: bool
    over_sample_pcts: Tuple[int, ...]
    output_dir: str
    log_level: str
    seed: int
    jobs: int

    def __post_init__(self) -> None:
        from .evalstats import MEASURES

        _check(0 < self.step_size_pct <= 100, "step size must be in (0, 100]")
        _check(self.limit_pct is None or 0 < self.limit_pct <= 100, "limit must be in (0, 100]")
        _check(0 < self.extremes_fraction < 0.5, "extremes fraction must be in (0, 0.5)")
        _check(self.n_bins >= 2, "n_bins must be >= 2")
        _check(0 < self.rho_threshold <= 1, "rho threshold must be in (0, 1]")
        _check(0 < self.r2_threshold <= 1, "r2 threshold must be in (0, 1]")
        _check(self.inner_bootstraps >= 1, "inner bootstraps must be >= 1")
        _check(self.n_boot >= 1, "bootstraps must be >= 1")
        _check(self.top_k >= 1, "top-k must be >= 1")
        _check(self.n_rep >= 1, "rank-shift repetitions must be >= 1")
        _check(self.jobs >= 1, "jobs must be >= 1")
        _check(self.seed >= 0, "seed must be a non-negative integer")
        _check(bool(self.classifiers), "at least one classifier is required")
        _check(all(pct >= 0 for pct in self.over_sample_pcts) and bool(self.over_sample_pcts),
               "over-sample percentages must be non-negative")
        _check(self.measure is None or self.measure in MEASURES,
               f"measure must be one of {', '.join(MEASURES)}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        merged = merge_config(DEFAULT_CONFIG, data)
        disc, learner = merged["discretization"], merged["learner"]
        classifier = str(learner["classifier"]).lower()
        if classifier == ALL_CLASSIFIERS:
            kinds = tuple(ClassifierKind)
        else:
            kinds = tuple(ClassifierKind.parse(name) for name in classifier.split(","))
        try:
            return cls(
                input_path=str(merged["input"]["path"]),
                target=str(merged["input"]["target"]),
                threshold_method=ThresholdMethod.parse(disc["threshold_method"]),
                cutpoint=None if disc["cutpoint"] is None else float(disc["cutpoint"]),
                step_size_pct=float(disc["step_size"]),
                limit_pct=None if disc["limit"] is None else float(disc["limit"]),
                extremes_fraction=float(disc["extremes"]),
                n_bins=int(disc["n_bins"]),
                rho_threshold=float(merged["preprocess"]["rho_threshold"]),
                r2_threshold=float(merged["preprocess"]["r2_threshold"]),
                classifiers=kinds,
                inner_bootstraps=int(learner["inner_bootstraps"]),
                reuse_x0_params=bool(learner["reuse_x0_params"]),
                n_boot=int(merged["bootstrap"]["n_boot"]),
                measure=merged["bootstrap"]["measure"],
                top_k=int(merged["interpretation"]["top_k"]),
                n_rep=int(merged["interpretation"]["n_rep"]),
                absolute_rank_diff=bool(merged["interpretation"]["absolute_rank_diff"]),
                over_sample_pcts=tuple(int(pct) for pct in merged["experiments"]["over_sample"]),
                output_dir=str(merged["output"]["dir"]),
                log_level=str(merged["logging"]["level"]).upper(),
                seed=int(merged["runtime"]["seed"]),
                jobs=int(merged["runtime"]["jobs"]),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration value: {exc}") from None

    def to_dict(self) -> Dict[str, Any]:
        """Nested mapping in the config-file layout; echoed into reports."""
        return {
            "input": {"path": self.input_path, "target": self.target},
            "discretization": {
                "threshold_method": self.threshold_method.value,
                "cutpoint": self.cutpoint,
                "step_size": self.step_size_pct,
                "limit": self.limit_pct,
                "extremes": self.extremes_fraction,
                "n_bins": self.n_bins,
            },
            "preprocess": {"rho_threshold": self.rho_threshold, "r2_threshold": self.r2_threshold},
            "learner": {
                "classifier": ",".join(kind.value for kind in self.classifiers),
                "inner_bootstraps": self.inner_bootstraps,
                "reuse_x0_params": self.reuse_x0_params,
            },
            "bootstrap": {"n_boot": self.n_boot, "measure": self.measure},
            "interpretation": {
                "top_k": self.top_k,
                "n_rep": self.n_rep,
                "absolute_rank_diff": self.absolute_rank_diff,
            },
            "experiments": {"over_sample": list(self.over_sample_pcts)},
            "output": {"dir": self.output_dir},
            "logging": {"level": self.log_level},
            "runtime": {"seed": self.seed, "jobs": self.jobs},
        }
