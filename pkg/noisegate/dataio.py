"""Dataset loading, validation and the target-side transforms.

A :class:`Dataset` is a feature matrix plus the continuous dependent variable
it will later be discretized on. Class labels are plain integer arrays with
``CLASS1`` (target at or below the cutpoint, the positive class) and
``CLASS2``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .errors import (
    EmptyClass,
    EmptyDataset,
    MissingFile,
    MissingTargetColumn,
    NonNumericCell,
    NonPositiveInput,
)

logger = logging.getLogger(__name__)

CLASS1 = 1
CLASS2 = 0
CLASS_NAMES = {CLASS1: "class1", CLASS2: "class2"}

LAMBDA_GRID = np.round(np.linspace(-2.0, 2.0, 401), 2)
DEFAULT_N_BINS = 5


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Dataset:
    feature_names: Tuple[str, ...]
    features: np.ndarray
    target: np.ndarray
    source_path: str = ""

    def __post_init__(self) -> None:
        features = np.atleast_2d(np.asarray(self.features, dtype=float))
        target = np.asarray(self.target, dtype=float).ravel()
        names = tuple(str(name) for name in self.feature_names)
        if features.shape[0] == 0 or target.size == 0:
            raise EmptyDataset("dataset has no rows")
        if features.shape[1] == 0 or not names:
            raise EmptyDataset("dataset has no feature columns")
        if len(names) != features.shape[1]:
            raise ValueError(f"{len(names)} feature names for {features.shape[1]} columns")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if target.size != features.shape[0]:
            raise ValueError(f"target has {target.size} values for {features.shape[0]} rows")
        if not (np.isfinite(features).all() and np.isfinite(target).all()):
            raise ValueError("dataset contains NaN or infinite values")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "target", _frozen(target))

    @property
    def n(self) -> int:
        return int(self.target.size)

    @property
    def p(self) -> int:
        return len(self.feature_names)

    def subset(self, rows: Sequence[int] | np.ndarray) -> "Dataset":
        """Rows selected by integer index or boolean mask, order preserved."""
        rows = np.asarray(rows)
        return Dataset(self.feature_names, self.features[rows], self.target[rows], self.source_path)

    def select_features(self, names: Sequence[str]) -> "Dataset":
        columns = [self.feature_names.index(name) for name in names]
        return Dataset(tuple(names), self.features[:, columns], self.target, self.source_path)


@dataclass(frozen=True)
class QuantaAssignment:
    """Per-class Box-Cox quanta: bin 1 is farthest from the threshold, ``n_bins`` adjacent to it."""

    bin_index: np.ndarray
    n_bins: int = DEFAULT_N_BINS
    lambdas: Tuple[float, float] = (1.0, 1.0)
    shifts: Tuple[float, float] = (0.0, 0.0)
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def counts(self, labels: np.ndarray) -> dict:
        """``{(bin, class_name): count}`` for every bin/class pair."""
        labels = np.asarray(labels)
        out = {}
        for b in range(1, self.n_bins + 1):
            for cls, name in CLASS_NAMES.items():
                out[(b, name)] = int(np.sum((self.bin_index == b) & (labels == cls)))
        return out


def load_csv(path: str | Path, target_column: str) -> Dataset:
    """Load a headed CSV; ``target_column`` becomes the target, every other column a feature."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptyDataset(f"{path} is empty") from None
    frame.columns = [str(column).strip() for column in frame.columns]
    if target_column not in frame.columns:
        raise MissingTargetColumn(target_column, list(frame.columns))
    if frame.empty:
        raise EmptyDataset(f"{path} has a header but no data rows")

    numeric = frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    bad = ~np.isfinite(numeric.to_numpy(dtype=float))
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        column = frame.columns[col]
        raise NonNumericCell(row + 1, column, frame.iat[row, col])

    feature_names = [column for column in frame.columns if column != target_column]
    if not feature_names:
        raise EmptyDataset(f"{path} has no feature columns besides {target_column!r}")
    logger.info("loaded %s: %d rows, %d features", path, len(frame), len(feature_names))
    return Dataset(
        feature_names=tuple(feature_names),
        features=numeric[feature_names].to_numpy(dtype=float),
        target=numeric[target_column].to_numpy(dtype=float),
        source_path=str(path),
    )


def write_csv(dataset: Dataset, path: str | Path, target_column: str = "y") -> Path:
    """Write features then the target column; ``load_csv`` reads it back unchanged."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.features, columns=list(dataset.feature_names))
    frame[target_column] = dataset.target
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def shift_positive(values: Sequence[float]) -> Tuple[np.ndarray, float]:
    """Shift by ``1 - min`` when any value is <= 0 so Box-Cox can be applied."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyDataset("no values to shift")
    low = float(values.min())
    shift = 1.0 - low if low <= 0 else 0.0
    return values + shift, shift


def box_cox_transform(values: np.ndarray, lmbda: float) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if lmbda == 0:
        return np.log(values)
    return (np.power(values, lmbda) - 1.0) / lmbda


def box_cox(values: Sequence[float], lmbda: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """Box-Cox transform with lambda fitted by profile log-likelihood over [-2, 2] step 0.01.

    Pass ``lmbda`` to force the exponent instead of fitting it.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyDataset("box_cox needs at least one value")
    if np.any(values <= 0):
        raise NonPositiveInput("box_cox needs strictly positive values; shift them first")
    if lmbda is None:
        if np.ptp(values) == 0:
            lmbda = 1.0
        else:
            llf = np.array([stats.boxcox_llf(lam, values) for lam in LAMBDA_GRID])
            lmbda = float(LAMBDA_GRID[int(np.nanargmax(llf))])
    return box_cox_transform(values, lmbda), float(lmbda)


def _equal_width_bins(values: np.ndarray, n_bins: int) -> np.ndarray:
    """0-based equal-width bin over [min, max]; the max lands in the last bin."""
    low, high = float(values.min()), float(values.max())
    if high == low:
        return np.full(values.size, n_bins - 1, dtype=int)
    width = (high - low) / n_bins
    return np.clip(np.floor((values - low) / width).astype(int), 0, n_bins - 1)


def bin_into_quanta(
    dataset: Dataset,
    labels: np.ndarray,
    n_bins: int = DEFAULT_N_BINS,
    lmbda: Optional[float] = None,
) -> QuantaAssignment:
    """Split each class into ``n_bins`` equal-width quanta of its Box-Cox-transformed target."""
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    labels = np.asarray(labels)
    if labels.size != dataset.n:
        raise ValueError("labels do not match the dataset length")
    bins = np.zeros(dataset.n, dtype=int)
    lambdas, shifts, flags = [], [], []
    for cls in (CLASS1, CLASS2):
        mask = labels == cls
        if not mask.any():
            raise EmptyClass(f"{CLASS_NAMES[cls]} has no points")
        shifted, shift = shift_positive(dataset.target[mask])
        if shift:
            flags.append(f"{CLASS_NAMES[cls]}_target_shifted_by_{shift:g}")
        transformed, lam = box_cox(shifted, lmbda)
        if np.ptp(transformed) == 0:
            flags.append(f"{CLASS_NAMES[cls]}_constant_target")
            bins[mask] = n_bins
        else:
            ascending = _equal_width_bins(transformed, n_bins)
            # class1 lies below the threshold, so its low end is farthest away
            bins[mask] = ascending + 1 if cls == CLASS1 else n_bins - ascending
        lambdas.append(lam)
        shifts.append(shift)
    logger.debug("quanta lambdas=%s shifts=%s", lambdas, shifts)
    bins.setflags(write=False)
    return QuantaAssignment(bins, n_bins, tuple(lambdas), tuple(shifts), tuple(flags))
