"""Random forest: bagged CART trees with a random feature subset per split."""
from __future__ import annotations

from typing import Dict

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from .cart import impurity_decrease, positive_column


class RandomForestLearner:
    """Probability is the mean of the trees' leaf class fractions."""

    def __init__(self) -> None:
        self.forest_: RandomForestClassifier | None = None

    def fit(self, features: np.ndarray, labels: np.ndarray, params: Dict, seed: int) -> "RandomForestLearner":
        mtry = int(params.get("mtry", max(1, int(np.ceil(np.sqrt(features.shape[1]))))))
        self.forest_ = RandomForestClassifier(
            n_estimators=int(params.get("n_trees", 100)),
            criterion="gini",
            max_features=min(mtry, features.shape[1]),
            min_samples_leaf=int(params.get("min_samples_leaf", 1)),
            bootstrap=True,
            random_state=seed,
        )
        self.forest_.fit(features, labels)
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return self.forest_.predict_proba(features)[:, positive_column(self.forest_)]

    def feature_importance(self) -> np.ndarray:
        return np.sum([impurity_decrease(tree) for tree in self.forest_.estimators_], axis=0)
