"""Single CART classification tree (Gini splits at midpoints, cost-complexity pruning)."""
from __future__ import annotations

from typing import Dict

import numpy as np
from sklearn.tree import DecisionTreeClassifier

from ..dataio import CLASS1


def gini(labels: np.ndarray) -> float:
    if labels.size == 0:
        return 0.0
    share = float(np.mean(labels == CLASS1))
    return 1.0 - share ** 2 - (1.0 - share) ** 2


def positive_column(estimator) -> int:
    return int(np.flatnonzero(estimator.classes_ == CLASS1)[0])


def build_tree(features: np.ndarray, labels: np.ndarray, params: Dict, seed: int) -> DecisionTreeClassifier:
    """Fit one tree; ``cp`` is scaled by the root impurity so it reads like a relative complexity parameter."""
    cp = float(params.get("cp", 0.0))
    tree = DecisionTreeClassifier(
        criterion="gini",
        min_samples_leaf=int(params.get("min_samples_leaf", 1)),
        max_depth=params.get("max_depth"),
        ccp_alpha=cp * gini(labels),
        random_state=seed,
    )
    return tree.fit(features, labels)


def impurity_decrease(estimator: DecisionTreeClassifier) -> np.ndarray:
    """Unnormalised weighted Gini decrease per feature, summed over the tree's splits."""
    return estimator.tree_.compute_feature_importances(normalize=False)


class CartLearner:
    def __init__(self) -> None:
        self.tree_: DecisionTreeClassifier | None = None

    def fit(self, features: np.ndarray, labels: np.ndarray, params: Dict, seed: int) -> "CartLearner":
        self.tree_ = build_tree(features, labels, params, seed)
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return self.tree_.predict_proba(features)[:, positive_column(self.tree_)]

    def feature_importance(self) -> np.ndarray:
        return impurity_decrease(self.tree_)
