"""K-nearest-neighbour vote on standardized features."""
from __future__ import annotations

from typing import Dict

import numpy as np
from sklearn.metrics import roc_auc_score
from sklearn.neighbors import KNeighborsClassifier

from ..dataio import CLASS1
from .cart import positive_column


def filter_importance(features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-feature ROC AUC as a score for class1, folded to max(auc, 1 - auc)."""
    truth = labels == CLASS1
    out = np.empty(features.shape[1])
    for column in range(features.shape[1]):
        auc = roc_auc_score(truth, features[:, column])
        out[column] = max(auc, 1.0 - auc)
    return out


class KnnLearner:
    def __init__(self) -> None:
        self.model_: KNeighborsClassifier | None = None
        self.importance_: np.ndarray | None = None

    def fit(self, features: np.ndarray, labels: np.ndarray, params: Dict, seed: int) -> "KnnLearner":
        k = min(int(params.get("k", 5)), features.shape[0])
        self.model_ = KNeighborsClassifier(n_neighbors=k, weights="uniform", algorithm="brute")
        self.model_.fit(features, labels)
        self.importance_ = filter_importance(features, labels)
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return self.model_.predict_proba(features)[:, positive_column(self.model_)]

    def feature_importance(self) -> np.ndarray:
        return self.importance_.copy()
