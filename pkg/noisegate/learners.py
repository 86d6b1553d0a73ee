"""Classifier registry, training, tuning and feature importance.

Classifier families are declared in ``learners_definitions/<kind>/learner.yaml``
(entrypoint + tuning grid) and implemented in ``learners_runtime``.
"""
from __future__ import annotations

import functools
import importlib
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import roc_auc_score
from sklearn.preprocessing import StandardScaler

from . import paths, utils
from .dataio import CLASS1, CLASS2
from .errors import ConfigError, DataError, InsufficientClass, ResampleError

logger = logging.getLogger(__name__)

DEFAULT_INNER_BOOTSTRAPS = 10
MAX_REDRAWS = 10
TUNE_STREAM = 1


class ClassifierKind(str, Enum):
    RANDOM_FOREST = "rf"
    LOGISTIC_REGRESSION = "lr"
    CART = "cart"
    KNN = "knn"

    @classmethod
    def parse(cls, value: "str | ClassifierKind") -> "ClassifierKind":
        if isinstance(value, ClassifierKind):
            return value
        key = str(value).strip().lower()
        for definition in load_learner_definitions().values():
            if key == definition.name or key in definition.aliases or key == definition.kind.lower():
                return cls(definition.name)
        raise ConfigError(f"unknown classifier {value!r}; choose from rf, lr, cart, knn")


@dataclass
class LearnerDefinition:
    name: str
    kind: str
    aliases: List[str]
    entrypoint: str
    grid: Dict[str, List[Any]]
    definition_path: Path


def _load_single_definition(def_path: Path) -> LearnerDefinition:
    data = utils.load_yaml(def_path / "learner.yaml")
    return LearnerDefinition(
        name=data.get("name", def_path.name),
        kind=data.get("kind", def_path.name),
        aliases=list(data.get("aliases", []) or []),
        entrypoint=data.get("entrypoint", ""),
        grid=dict(data.get("grid", {}) or {}),
        definition_path=def_path,
    )


@functools.lru_cache(maxsize=None)
def _definitions_in(base_dir: Path) -> Dict[str, LearnerDefinition]:
    definitions: Dict[str, LearnerDefinition] = {}
    for child in sorted(base_dir.iterdir()):
        if child.is_dir() and (child / "learner.yaml").exists():
            definition = _load_single_definition(child)
            definitions[definition.name] = definition
    return definitions


def load_learner_definitions(base_dir: Path | None = None) -> Dict[str, LearnerDefinition]:
    """Definitions found under ``base_dir`` (default: the packaged ones), keyed by name."""
    return dict(_definitions_in(Path(base_dir or paths.get_learners_dir()).resolve()))


def get_definition(kind: "str | ClassifierKind") -> LearnerDefinition:
    return load_learner_definitions()[ClassifierKind.parse(kind).value]


def _instantiate(definition: LearnerDefinition):
    module_path, class_name = definition.entrypoint.split(":", 1)
    module = importlib.import_module(module_path)
    return getattr(module, class_name)()


def _resolve_mtry(symbol: Any, n_features: int) -> int:
    if symbol == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if symbol == "third":
        return max(1, math.ceil(n_features / 3))
    if symbol == "all":
        return n_features
    return max(1, min(int(symbol), n_features))


def expand_grid(grid: Dict[str, Sequence[Any]], n_features: int) -> Tuple[Dict[str, Any], ...]:
    """Cartesian product of a grid in declaration order, with ``mtry`` symbols resolved."""
    keys = list(grid)
    candidates: List[Dict[str, Any]] = []
    for values in itertools.product(*(grid[key] for key in keys)):
        candidate = dict(zip(keys, values))
        if "mtry" in candidate:
            candidate["mtry"] = _resolve_mtry(candidate["mtry"], n_features)
        if candidate not in candidates:
            candidates.append(candidate)
    return tuple(candidates)


@dataclass(frozen=True)
class TuningGrid:
    candidates: Dict[str, Tuple[Dict[str, Any], ...]]
    inner_bootstraps: int = DEFAULT_INNER_BOOTSTRAPS
    objective: str = "auc"

    def __post_init__(self) -> None:
        for name, options in self.candidates.items():
            if not options:
                raise ConfigError(f"tuning grid for {name} is empty")

    @classmethod
    def default(cls, n_features: int, inner_bootstraps: int = DEFAULT_INNER_BOOTSTRAPS) -> "TuningGrid":
        candidates = {
            name: expand_grid(definition.grid, n_features)
            for name, definition in load_learner_definitions().items()
        }
        return cls(candidates=candidates, inner_bootstraps=inner_bootstraps)

    def candidates_for(self, kind: "str | ClassifierKind") -> Tuple[Dict[str, Any], ...]:
        return self.candidates[ClassifierKind.parse(kind).value]


@dataclass(frozen=True)
class TrainedModel:
    kind: ClassifierKind
    learner: Any
    feature_names: Tuple[str, ...]
    hyper_params: Dict[str, Any]
    mean: np.ndarray
    scale: np.ndarray
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def standardize(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != self.mean.size:
            raise DataError(f"expected {self.mean.size} feature columns, got {features.shape}")
        return (features - self.mean) / self.scale


def check_two_classes(labels: np.ndarray, minimum: int = 2) -> None:
    labels = np.asarray(labels)
    for cls, name in ((CLASS1, "class1"), (CLASS2, "class2")):
        count = int(np.sum(labels == cls))
        if count < minimum:
            raise InsufficientClass(f"{name} has {count} points; need at least {minimum}")


def train(
    kind: "str | ClassifierKind",
    features: np.ndarray,
    labels: np.ndarray,
    hyper_params: Dict[str, Any],
    seed: int,
    feature_names: Optional[Sequence[str]] = None,
) -> TrainedModel:
    """Fit one classifier on z-scored features."""
    kind = ClassifierKind.parse(kind)
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels).astype(int)
    if not np.isfinite(features).all():
        raise DataError("features contain NaN or infinite values")
    check_two_classes(labels)
    scaler = StandardScaler().fit(features)
    learner = _instantiate(get_definition(kind))
    learner.fit(scaler.transform(features), labels, dict(hyper_params), seed)
    flags = ()
    if getattr(learner, "converged_", True) is False:
        flags = ("irls_not_converged",)
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{i}" for i in range(features.shape[1]))
    return TrainedModel(
        kind=kind,
        learner=learner,
        feature_names=names,
        hyper_params=dict(hyper_params),
        mean=scaler.mean_.copy(),
        scale=scaler.scale_.copy(),
        flags=flags,
    )


def predict_proba(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """P(class1) per row."""
    probs = model.learner.predict_proba(model.standardize(features))
    return np.clip(np.asarray(probs, dtype=float), 0.0, 1.0)


def predict_labels(probs: np.ndarray, cutoff: float = 0.5) -> np.ndarray:
    """Ties at the cutoff go to class1."""
    return np.where(np.asarray(probs) >= cutoff, CLASS1, CLASS2)


def feature_importance(model: TrainedModel) -> np.ndarray:
    return np.asarray(model.learner.feature_importance(), dtype=float)


def out_of_sample_split(
    rng: np.random.Generator,
    labels: np.ndarray,
    max_redraws: int = MAX_REDRAWS,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Draw N rows with replacement for training; never-drawn rows are the test set.

    Draws with fewer than two training rows of a class, or a test set
    missing a class, are redrawn up to
    ``max_redraws`` times. Returns (train_idx, test_idx, redraws).
    """
    labels = np.asarray(labels)
    n = labels.size
    for redraws in range(max_redraws + 1):
        train_idx = rng.integers(0, n, size=n)
        test_mask = np.ones(n, dtype=bool)
        test_mask[train_idx] = False
        test_idx = np.flatnonzero(test_mask)
        train_counts = [int(np.sum(labels[train_idx] == cls)) for cls in (CLASS1, CLASS2)]
        if min(train_counts) >= 2 and np.unique(labels[test_idx]).size == 2:
            return train_idx, test_idx, redraws
    raise ResampleError(f"no resample with both classes in train and test after {max_redraws} redraws")


def tune(
    kind: "str | ClassifierKind",
    features: np.ndarray,
    labels: np.ndarray,
    grid: TuningGrid,
    seed: int,
) -> Dict[str, Any]:
    """Pick the candidate with the best mean out-of-bag AUC; ties keep grid order."""
    kind = ClassifierKind.parse(kind)
    candidates = grid.candidates_for(kind)
    if len(candidates) == 1:
        return dict(candidates[0])
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels).astype(int)
    splits = []
    for b in range(grid.inner_bootstraps):
        train_idx, test_idx, _ = out_of_sample_split(utils.substream(seed, TUNE_STREAM, b), labels)
        splits.append((train_idx, test_idx, utils.derive_seed(seed, TUNE_STREAM, b)))

    best, best_score = candidates[0], -np.inf
    for candidate in candidates:
        scores = []
        for train_idx, test_idx, fit_seed in splits:
            model = train(kind, features[train_idx], labels[train_idx], candidate, fit_seed)
            probs = predict_proba(model, features[test_idx])
            scores.append(roc_auc_score(labels[test_idx] == CLASS1, probs))
        score = float(np.mean(scores))
        logger.debug("tune %s %s -> mean OOB AUC %.4f", kind.value, candidate, score)
        if score > best_score:
            best, best_score = candidate, score
    logger.debug("tuned %s: %s (AUC %.4f)", kind.value, best, best_score)
    return dict(best)
