import numpy as np
import pytest
from scipy import special

from config.settings import settings
from models.sparse_linear import (
    RegressionProblem,
    default_penalty,
    kkt_residual,
    lasso_fit,
    lasso_objective,
    logistic_lasso_at_sparsity,
    logistic_lasso_cv,
    logistic_lasso_fit,
    ridge_fit,
    soft_threshold,
)
from utils.errors import ConfigurationError, InputError


def _random_problem(rng, n=50, d=20, scale=0.1):
    design = rng.standard_normal((n, d))
    beta = np.zeros(d)
    beta[:3] = [1.0, -0.5, 0.25]
    response = design @ beta + 0.3 * rng.standard_normal(n)
    lam_max = np.max(np.abs(design.T @ response)) / n
    return RegressionProblem(design, response, scale * lam_max)


class TestLasso:
    def test_unpenalized_square_system(self, rng):
        design = np.eye(4) + 0.1 * rng.standard_normal((4, 4))
        response = rng.standard_normal(4)
        solution = lasso_fit(RegressionProblem(design, response, 0.0), tol=1e-14, max_sweeps=100_000)
        np.testing.assert_allclose(solution.coefficients, np.linalg.solve(design, response), atol=1e-8)

    def test_full_shrinkage(self, rng):
        design = rng.standard_normal((30, 10))
        response = rng.standard_normal(30)
        penalty = np.max(np.abs(design.T @ response)) / 30
        solution = lasso_fit(RegressionProblem(design, response, penalty))
        assert np.all(solution.coefficients == 0.0)
        assert solution.converged

    def test_orthonormal_design_soft_thresholds(self, rng):
        n, d = 40, 6
        q, _ = np.linalg.qr(rng.standard_normal((n, d)))
        design = np.sqrt(n) * q
        response = rng.standard_normal(n)
        solution = lasso_fit(RegressionProblem(design, response, 0.05))
        expected = soft_threshold(design.T @ response / n, 0.05)
        np.testing.assert_allclose(solution.coefficients, expected, atol=1e-10)

    def test_kkt_on_random_problems(self, rng):
        for _ in range(100):
            problem = _random_problem(rng)
            solution = lasso_fit(problem)
            assert solution.kkt_residual <= 1e-6
            assert kkt_residual(problem, solution.coefficients) == pytest.approx(solution.kkt_residual)

    def test_kkt_flag_follows_tolerance(self, rng, monkeypatch):
        solution = lasso_fit(_random_problem(rng))
        assert solution.kkt_satisfied
        monkeypatch.setattr(settings, "kkt_tolerance", -1.0)
        assert not solution.kkt_satisfied

    def test_objective_non_increasing(self, rng):
        problem = _random_problem(rng, n=60, d=40, scale=0.05)
        trace = np.asarray(lasso_fit(problem).objective_trace)
        assert np.all(np.diff(trace) <= 1e-12 * (1.0 + np.abs(trace[:-1])))
        assert trace[-1] == pytest.approx(lasso_objective(problem, lasso_fit(problem).coefficients))

    def test_permutation_equivariance(self, rng):
        problem = _random_problem(rng)
        perm = rng.permutation(problem.n_features)
        permuted = RegressionProblem(problem.design[:, perm], problem.response, problem.penalty)
        np.testing.assert_allclose(
            lasso_fit(permuted).coefficients, lasso_fit(problem).coefficients[perm], atol=1e-8
        )

    def test_scaling(self, rng):
        problem = _random_problem(rng)
        scaled = RegressionProblem(problem.design, 3.0 * problem.response, 3.0 * problem.penalty)
        np.testing.assert_allclose(
            lasso_fit(scaled).coefficients, 3.0 * lasso_fit(problem).coefficients, atol=1e-8
        )

    def test_warm_start_reaches_same_solution(self, rng):
        problem = _random_problem(rng)
        cold = lasso_fit(problem).coefficients
        warm = lasso_fit(problem, init=cold + 0.1).coefficients
        np.testing.assert_allclose(warm, cold, atol=1e-8)

    def test_non_convergence_is_reported(self, rng):
        problem = _random_problem(rng, n=40, d=30, scale=0.01)
        solution = lasso_fit(problem, tol=1e-14, max_sweeps=1)
        assert not solution.converged
        assert solution.iterations == 1

    def test_invalid_inputs(self, rng):
        with pytest.raises(InputError):
            RegressionProblem(np.array([[np.inf, 1.0]]), np.array([1.0]), 0.1)
        with pytest.raises(InputError):
            RegressionProblem(np.ones((3, 2)), np.ones(2), 0.1)
        with pytest.raises(ConfigurationError):
            RegressionProblem(np.ones((3, 2)), np.ones(3), -1.0)
        with pytest.raises(ConfigurationError):
            lasso_fit(_random_problem(rng), tol=0.0)

    def test_default_penalty(self):
        assert default_penalty(0.5, 1.0, 100, 50) == pytest.approx(
            0.5 * np.sqrt(2.0 * (np.log(100) + np.log(50)) / 50)
        )


class TestRidge:
    def test_normal_equations(self, rng):
        design = rng.standard_normal((10, 3))
        response = rng.standard_normal(10)
        problem = RegressionProblem(design, response, 0.2)
        coefficients = ridge_fit(problem)
        residual = (design.T @ design + 10 * 0.2 * np.eye(3)) @ coefficients - design.T @ response
        assert np.max(np.abs(residual)) < 1e-10

    def test_identity_design_shrinks(self, rng):
        response = rng.standard_normal(4)
        previous = np.abs(response)
        for penalty in (0.01, 0.1, 1.0, 10.0):
            coefficients = ridge_fit(RegressionProblem(np.eye(4), response, penalty))
            np.testing.assert_allclose(coefficients, response / (1.0 + 4 * penalty))
            assert np.all(np.abs(coefficients) <= previous)
            previous = np.abs(coefficients)

    def test_null_response(self, rng):
        coefficients = ridge_fit(RegressionProblem(rng.standard_normal((6, 3)), np.zeros(6), 0.5))
        assert np.all(coefficients == 0.0)

    def test_penalty_must_be_positive(self, rng):
        with pytest.raises(ConfigurationError):
            ridge_fit(RegressionProblem(rng.standard_normal((6, 3)), np.zeros(6), 0.0))


class TestLogisticLasso:
    @staticmethod
    def _separable(rng, n=60):
        labels = np.repeat([0, 1], n // 2)
        signal = 2.0 * labels - 1.0 + 0.3 * rng.standard_normal(n)
        features = np.column_stack([signal, rng.standard_normal(n), np.zeros(n)])
        features[:, :2] = (features[:, :2] - features[:, :2].mean(axis=0)) / features[:, :2].std(axis=0)
        return features, labels

    def test_separable_toy_accuracy(self, rng):
        features, labels = self._separable(rng)
        fit = logistic_lasso_fit(features, labels, penalty=0.01)
        assert np.mean(fit.predict(features) == labels) >= 0.95
        assert fit.coefficients[2] == 0.0

    def test_large_penalty_gives_intercept_only(self, rng):
        features, labels = self._separable(rng)
        fit = logistic_lasso_fit(features, labels, penalty=10.0)
        assert np.all(fit.coefficients == 0.0)
        assert fit.intercept == pytest.approx(0.0, abs=1e-6)

    def test_cross_validation_picks_from_path(self, rng):
        features, labels = self._separable(rng)
        fit = logistic_lasso_cv(features, labels, n_folds=5, seed=0)
        assert fit.penalty in fit.penalty_path
        assert fit.cv_scores.shape == fit.penalty_path.shape
        assert fit.coefficients[2] == 0.0
        assert np.mean(fit.predict(features) == labels) >= 0.95

    @pytest.mark.parametrize("target", [1, 3, 5])
    def test_sparsity_target_is_met(self, target):
        rng = np.random.default_rng(21)
        features = rng.standard_normal((120, 30))
        logits = features[:, :6] @ np.array([1.5, -1.2, 1.0, -0.8, 0.6, 0.5])
        labels = (rng.uniform(size=120) < special.expit(logits)).astype(int)
        fit = logistic_lasso_at_sparsity(features, labels, target)
        assert np.count_nonzero(fit.coefficients) == target

    def test_sparsity_target_out_of_range(self, rng):
        features, labels = self._separable(rng)
        for target in (0, 4):
            with pytest.raises(ConfigurationError):
                logistic_lasso_at_sparsity(features, labels, target)
