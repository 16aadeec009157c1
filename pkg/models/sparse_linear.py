"""Deterministic sparse and dense linear regression solvers.

The lasso objective is ``(1/2n) ||y - X b||^2 + lam ||b||_1`` and is solved by
cyclic coordinate descent with soft-thresholding. Full sweeps alternate with
active-set sweeps; the fixed point is the same either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg, special
from sklearn.model_selection import StratifiedKFold

from config.settings import settings
from utils.errors import ConfigurationError, InputError
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    design: np.ndarray
    response: np.ndarray
    penalty: float

    def __post_init__(self):
        design = np.asarray(self.design, dtype=float)
        response = np.asarray(self.response, dtype=float)
        if design.ndim != 2:
            raise InputError(f"design must be a matrix, got shape {design.shape}")
        if response.shape != (design.shape[0],):
            raise InputError(
                f"response has shape {response.shape}, expected ({design.shape[0]},)"
            )
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
            raise InputError("regression inputs contain non-finite entries")
        if not math.isfinite(self.penalty) or self.penalty < 0:
            raise ConfigurationError(f"penalty must be a finite nonnegative number, got {self.penalty}")
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)

    @property
    def n_samples(self) -> int:
        return self.design.shape[0]

    @property
    def n_features(self) -> int:
        return self.design.shape[1]


@dataclass
class LassoSolution:
    coefficients: np.ndarray
    kkt_residual: float
    iterations: int
    converged: bool
    objective_trace: List[float] = field(default_factory=list)

    @property
    def kkt_satisfied(self) -> bool:
        return self.kkt_residual <= settings.kkt_tolerance


def soft_threshold(value, threshold):
    return np.sign(value) * np.maximum(np.abs(value) - threshold, 0.0)


def lasso_objective(problem: RegressionProblem, coefficients: np.ndarray) -> float:
    n = max(problem.n_samples, 1)
    residual = problem.response - problem.design @ coefficients
    return float(residual @ residual / (2.0 * n) + problem.penalty * np.abs(coefficients).sum())


def kkt_residual(problem: RegressionProblem, coefficients: np.ndarray) -> float:
    """Largest violation of the lasso optimality conditions."""
    if problem.n_samples == 0:
        return 0.0
    gradient = problem.design.T @ (problem.response - problem.design @ coefficients) / problem.n_samples
    lam = problem.penalty
    active = coefficients != 0
    violation = np.where(
        active,
        np.abs(gradient - lam * np.sign(coefficients)),
        np.maximum(np.abs(gradient) - lam, 0.0),
    )
    return float(violation.max(initial=0.0))


def default_penalty(noise_sigma: float, x_max: float, dim: int, t: int) -> float:
    """sigma * x_max * sqrt(2 (log d + log t) / t), the lasso-scale rate."""
    t = max(int(t), 1)
    return float(noise_sigma * x_max * math.sqrt(2.0 * (math.log(dim) + math.log(t)) / t))


def _cd_sweep(
    design: np.ndarray,
    residual: np.ndarray,
    coefficients: np.ndarray,
    col_scale: np.ndarray,
    penalty: float,
    n: int,
    indices: Sequence[int],
    weights: Optional[np.ndarray] = None,
) -> float:
    """One coordinate descent pass over ``indices``; returns max |change|."""
    max_change = 0.0
    for j in indices:
        scale = col_scale[j]
        if scale == 0.0:
            coefficients[j] = 0.0
            continue
        column = design[:, j]
        weighted = column if weights is None else weights * column
        rho = weighted @ residual / n + scale * coefficients[j]
        new = float(soft_threshold(rho, penalty)) / scale
        change = new - coefficients[j]
        if change != 0.0:
            residual -= change * column
            coefficients[j] = new
            max_change = max(max_change, abs(change))
    return max_change


def lasso_fit(
    problem: RegressionProblem,
    tol: Optional[float] = None,
    max_sweeps: Optional[int] = None,
    init: Optional[np.ndarray] = None,
) -> LassoSolution:
    """Cyclic coordinate descent for the lasso.

    Terminates once a full sweep moves no coefficient by more than ``tol``.
    Non-convergence within ``max_sweeps`` is reported, not raised.
    """
    tol = settings.lasso_tol if tol is None else tol
    max_sweeps = settings.lasso_max_sweeps if max_sweeps is None else max_sweeps
    if tol <= 0:
        raise ConfigurationError(f"tol must be positive, got {tol}")

    n, d = problem.design.shape
    coefficients = np.zeros(d) if init is None else np.array(init, dtype=float)
    if n == 0:
        zeros = np.zeros(d)
        return LassoSolution(zeros, 0.0, 0, True, [0.0])

    design = np.asfortranarray(problem.design)
    residual = problem.response - design @ coefficients
    col_scale = np.einsum("ij,ij->j", design, design) / n
    all_indices = range(d)

    def objective() -> float:
        return float(residual @ residual / (2.0 * n) + problem.penalty * np.abs(coefficients).sum())

    objective_trace = [objective()]
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        change = _cd_sweep(design, residual, coefficients, col_scale, problem.penalty, n, all_indices)
        sweeps += 1
        objective_trace.append(objective())
        if change < tol:
            converged = True
            break
        active = np.flatnonzero(coefficients)
        while sweeps < max_sweeps:
            change = _cd_sweep(design, residual, coefficients, col_scale, problem.penalty, n, active)
            sweeps += 1
            objective_trace.append(objective())
            if change < tol:
                break

    solution = LassoSolution(
        coefficients=coefficients,
        kkt_residual=kkt_residual(problem, coefficients),
        iterations=sweeps,
        converged=converged,
        objective_trace=objective_trace,
    )
    if not solution.kkt_satisfied:
        logger.warning(
            "Lasso optimality conditions not met",
            kkt_residual=solution.kkt_residual,
            tolerance=settings.kkt_tolerance,
            sweeps=sweeps,
        )
    return solution


def ridge_solve(gram: np.ndarray, moment: np.ndarray) -> np.ndarray:
    """Solve ``gram @ b = moment`` for a symmetric positive definite gram."""
    return linalg.solve(gram, moment, assume_a="pos")


def ridge_fit(problem: RegressionProblem) -> np.ndarray:
    """(X^T X + n lam I)^{-1} X^T y."""
    if problem.penalty <= 0:
        raise ConfigurationError(f"ridge penalty must be positive, got {problem.penalty}")
    n, d = problem.design.shape
    gram = problem.design.T @ problem.design + max(n, 1) * problem.penalty * np.eye(d)
    return ridge_solve(gram, problem.design.T @ problem.response)


# Logistic lasso -------------------------------------------------------------


@dataclass
class LogisticLassoFit:
    coefficients: np.ndarray
    intercept: float
    penalty: float
    deviance: float
    converged: bool
    cv_scores: Optional[np.ndarray] = None
    penalty_path: Optional[np.ndarray] = None

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        return features @ self.coefficients + self.intercept

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.decision_function(features) > 0).astype(int)


def _binomial_deviance(labels: np.ndarray, eta: np.ndarray) -> float:
    # -2 log-likelihood, computed stably through log(1 + e^eta)
    return float(2.0 * np.sum(np.logaddexp(0.0, eta) - labels * eta))


def logistic_lasso_fit(
    features: np.ndarray,
    labels: np.ndarray,
    penalty: float,
    max_irls: int = 50,
    tol: float = 1e-8,
    init: Optional[LogisticLassoFit] = None,
) -> LogisticLassoFit:
    """l1-penalized logistic regression by IRLS around weighted coordinate descent.

    Minimizes ``deviance / (2n) + penalty * ||b||_1`` with an unpenalized
    intercept.
    """
    features = np.asfortranarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    n, d = features.shape
    coefficients = np.zeros(d) if init is None else init.coefficients.copy()
    mean_label = float(np.clip(labels.mean(), 1e-6, 1 - 1e-6))
    intercept = float(special.logit(mean_label)) if init is None else init.intercept

    converged = False
    deviance = math.inf
    for _ in range(max_irls):
        eta = features @ coefficients + intercept
        prob = special.expit(eta)
        weights = np.maximum(prob * (1.0 - prob), 1e-5)
        working = eta + (labels - prob) / weights

        previous = coefficients.copy()
        weight_sum = weights.sum()
        intercept = float(weights @ (working - features @ coefficients) / weight_sum)
        residual = working - intercept - features @ coefficients
        col_scale = np.einsum("i,ij,ij->j", weights, features, features) / n

        def sweep(indices) -> float:
            nonlocal intercept, residual
            change = _cd_sweep(features, residual, coefficients, col_scale, penalty, n, indices, weights)
            shift = float(weights @ residual / weight_sum)
            intercept += shift
            residual -= shift
            return max(change, abs(shift))

        for _ in range(1000):
            if sweep(range(d)) < tol:
                break
            active = np.flatnonzero(coefficients)
            for _ in range(1000):
                if sweep(active) < tol:
                    break

        new_deviance = _binomial_deviance(labels, features @ coefficients + intercept)
        step = np.max(np.abs(coefficients - previous), initial=0.0)
        if step < 1e-6 or abs(deviance - new_deviance) < tol * (1.0 + abs(new_deviance)):
            deviance = new_deviance
            converged = True
            break
        deviance = new_deviance

    return LogisticLassoFit(
        coefficients=coefficients,
        intercept=intercept,
        penalty=penalty,
        deviance=deviance,
        converged=converged,
    )


def logistic_penalty_path(features: np.ndarray, labels: np.ndarray, n_penalties: int = 12, ratio: float = 0.02) -> np.ndarray:
    n = features.shape[0]
    centered = np.asarray(labels, dtype=float) - np.mean(labels)
    lam_max = float(np.max(np.abs(features.T @ centered)) / n)
    if lam_max == 0.0:
        return np.array([1e-3])
    return np.geomspace(lam_max, lam_max * ratio, n_penalties)


def logistic_lasso_cv(
    features: np.ndarray,
    labels: np.ndarray,
    n_folds: int = 5,
    penalties: Optional[np.ndarray] = None,
    seed: int = 0,
) -> LogisticLassoFit:
    """Pick the penalty by stratified K-fold held-out deviance, then refit on all rows."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    penalties = logistic_penalty_path(features, labels) if penalties is None else np.asarray(penalties)

    min_class = int(np.bincount(labels, minlength=2).min())
    folds = max(2, min(n_folds, min_class))
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)

    scores = np.zeros(len(penalties))
    for train, test in splitter.split(features, labels):
        warm = None
        for k, lam in enumerate(penalties):
            warm = logistic_lasso_fit(features[train], labels[train], lam, init=warm)
            scores[k] += _binomial_deviance(labels[test], warm.decision_function(features[test]))

    best = int(np.argmin(scores))
    logger.info(
        "Selected logistic lasso penalty",
        penalty=float(penalties[best]),
        folds=folds,
        path_length=len(penalties),
    )
    warm = None
    for lam in penalties[: best + 1]:
        warm = logistic_lasso_fit(features, labels, lam, init=warm)
    warm.cv_scores = scores / folds
    warm.penalty_path = penalties
    return warm


def logistic_lasso_at_sparsity(
    features: np.ndarray,
    labels: np.ndarray,
    target: int,
    ratio: float = 0.02,
    max_steps: int = 60,
) -> LogisticLassoFit:
    """Bisect the penalty on a log scale for a fit with ``target`` nonzeros.

    If the count never equals ``target`` the closest fit seen is returned,
    the sparser one on ties.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if not 1 <= target <= features.shape[1]:
        raise ConfigurationError(f"target sparsity must lie in [1, {features.shape[1]}], got {target}")

    def count(fit: LogisticLassoFit) -> int:
        return int(np.count_nonzero(fit.coefficients))

    def rank(fit: LogisticLassoFit):
        return abs(count(fit) - target), count(fit)

    path = logistic_penalty_path(features, labels, n_penalties=2, ratio=ratio)
    hi_lam, lo_lam = float(path[0]), float(path[-1])
    hi_fit = logistic_lasso_fit(features, labels, hi_lam)
    lo_fit = logistic_lasso_fit(features, labels, lo_lam, init=hi_fit)
    best = min((hi_fit, lo_fit), key=rank)
    steps = 0
    if count(lo_fit) < target:
        logger.warning("Penalty path does not reach the target sparsity", target=target, reached=count(lo_fit))
    else:
        while count(best) != target and steps < max_steps:
            mid = math.sqrt(hi_lam * lo_lam)
            fit = logistic_lasso_fit(features, labels, mid, init=hi_fit)
            steps += 1
            best = min((best, fit), key=rank)
            if count(fit) < target:
                hi_lam, hi_fit = mid, fit
            else:
                lo_lam = mid

    logger.info("Selected logistic lasso penalty by sparsity", penalty=best.penalty, nonzeros=count(best), steps=steps)
    return best
