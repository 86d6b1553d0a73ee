"""Ridge-penalised logistic regression fitted by iteratively reweighted least squares."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)

MAX_ITER = 100
TOLERANCE = 1e-8


def _design(features: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(features.shape[0]), features])


def _penalty(ridge: float, size: int) -> np.ndarray:
    """Ridge on the slopes only; the intercept is unpenalised."""
    diag = np.full(size, ridge, dtype=float)
    diag[0] = 0.0
    return diag


def logistic_objective(beta: np.ndarray, features: np.ndarray, labels: np.ndarray, ridge: float) -> float:
    """Negative log-likelihood plus ``ridge/2 * ||slopes||^2``."""
    x = _design(features)
    eta = x @ beta
    nll = float(np.sum(np.logaddexp(0.0, eta) - labels * eta))
    return nll + 0.5 * float(np.sum(_penalty(ridge, beta.size) * beta ** 2))


def logistic_gradient(beta: np.ndarray, features: np.ndarray, labels: np.ndarray, ridge: float) -> np.ndarray:
    x = _design(features)
    return x.T @ (expit(x @ beta) - labels) + _penalty(ridge, beta.size) * beta


@dataclass
class IrlsResult:
    coef: np.ndarray
    iterations: int
    converged: bool
    deviance: float


def fit_irls(
    features: np.ndarray,
    labels: np.ndarray,
    ridge: float = 1e-8,
    max_iter: int = MAX_ITER,
    tol: float = TOLERANCE,
) -> IrlsResult:
    """Newton/IRLS on the penalised objective; stops when |delta deviance| < ``tol``.

    ``labels`` are 1 for the positive class and 0 otherwise. Returned ``coef``
    holds the intercept first.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    x = _design(features)
    penalty = np.diag(_penalty(ridge, x.shape[1]))
    beta = np.zeros(x.shape[1])
    objective = logistic_objective(beta, features, labels, ridge)
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        mu = expit(x @ beta)
        weights = mu * (1.0 - mu)
        hessian = x.T @ (weights[:, None] * x) + penalty
        gradient = x.T @ (mu - labels) + penalty @ beta
        try:
            step = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hessian, gradient, rcond=None)[0]
        # step halving keeps the penalised deviance monotone
        scale = 1.0
        candidate = beta - step
        new_objective = logistic_objective(candidate, features, labels, ridge)
        while new_objective > objective and scale > 1e-6:
            scale /= 2.0
            candidate = beta - scale * step
            new_objective = logistic_objective(candidate, features, labels, ridge)
        delta = abs(2.0 * (objective - new_objective))
        beta, objective = candidate, new_objective
        if delta < tol:
            converged = True
            break
    if not converged:
        logger.debug("IRLS stopped after %d iterations without converging", iteration)
    return IrlsResult(coef=beta, iterations=iteration, converged=converged, deviance=2.0 * objective)


class LogisticRegressionLearner:
    """Logistic regression on standardized features; importance is |coefficient|."""

    def __init__(self) -> None:
        self.coef_: np.ndarray | None = None
        self.converged_ = False

    def fit(self, features: np.ndarray, labels: np.ndarray, params: Dict, seed: int) -> "LogisticRegressionLearner":
        result = fit_irls(features, labels, ridge=float(params.get("ridge", 1e-8)))
        self.coef_ = result.coef
        self.converged_ = result.converged
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return expit(_design(np.asarray(features, dtype=float)) @ self.coef_)

    def feature_importance(self) -> np.ndarray:
        return np.abs(self.coef_[1:])
