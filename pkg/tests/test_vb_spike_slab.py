import math

import numpy as np
import pytest
from scipy import special

from models.vb_spike_slab import (
    ConstantLambda,
    PracticalSqrt,
    SpikeSlabPosterior,
    SpikeSlabPrior,
    TheoryLambda,
    cavi_fit,
    complexity_constants,
    elbo,
    exact_posterior,
    expected_abs,
    lambda_schedule,
    model_size_prior,
    posterior_mean,
    sample_posterior,
)
from utils.errors import ConfigurationError, InputError


def _two_dim_instance(seed, n=30, beta=(3.0, 0.0), sigma=1.0):
    rng = np.random.default_rng(seed)
    design = rng.standard_normal((n, 2))
    response = design @ np.asarray(beta) + sigma * rng.standard_normal(n)
    return design, response


class TestPrior:
    def test_inclusion_probability(self):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=0.5, dim=9)
        assert prior.inclusion_b0 == 9.0
        assert prior.inclusion_prob == pytest.approx(0.1)
        assert prior.rate == pytest.approx(2.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"slab_scale": 0.0, "noise_sigma": 1.0, "dim": 3},
            {"slab_scale": 1.0, "noise_sigma": 0.0, "dim": 3},
            {"slab_scale": 1.0, "noise_sigma": 1.0, "dim": 3, "inclusion_exponent": 0.0},
        ],
    )
    def test_invalid_prior(self, kwargs):
        with pytest.raises(ConfigurationError):
            SpikeSlabPrior(**kwargs)

    @pytest.mark.parametrize("dim", [10, 50])
    def test_model_size_sandwich(self, dim):
        mass = model_size_prior(dim)
        assert mass.sum() == pytest.approx(1.0)
        constants = complexity_constants(dim)
        assert constants.a1 > 0 and constants.a2 > 0
        assert constants.holds(dim)


class TestExpectedAbs:
    def test_matches_monte_carlo(self, rng):
        draws = 0.7 + 1.3 * rng.standard_normal(1_000_000)
        assert expected_abs(0.7, 1.3) == pytest.approx(np.abs(draws).mean(), rel=5e-3)

    def test_zero_mean(self):
        assert expected_abs(0.0, 2.0) == pytest.approx(2.0 * math.sqrt(2.0 / math.pi))


class TestCavi:
    def test_empty_likelihood_gives_prior_inclusion(self):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=1.0, dim=5)
        posterior = cavi_fit(prior, np.empty((0, 5)), np.empty(0))
        w = prior.inclusion_prob
        expected = special.expit(special.logit(w) + math.log(math.pi / (2.0 * math.sqrt(math.e))))
        np.testing.assert_allclose(posterior.gamma, expected, rtol=1e-8)
        assert np.all(np.abs(posterior.gamma / w - 1.0) < 0.05)
        assert np.ptp(posterior.mu) == 0.0 and np.ptp(posterior.sdev) == 0.0

    def test_matches_quadrature_posterior_mean(self):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=1.0, dim=2)
        design, response = _two_dim_instance(0)
        fitted = cavi_fit(prior, design, response)
        exact = exact_posterior(prior, design, response)
        assert np.max(np.abs(posterior_mean(fitted) - exact.posterior_mean)) < 0.05

    def test_strong_and_null_coordinates(self, rng):
        n = 400
        x1 = rng.standard_normal(n)
        response = 3.0 * x1 + rng.standard_normal(n)
        basis = np.column_stack([x1, response])
        raw = rng.standard_normal(n)
        x2 = raw - basis @ np.linalg.lstsq(basis, raw, rcond=None)[0]
        x2 *= math.sqrt(n) / np.linalg.norm(x2)
        design = np.column_stack([x1, x2])
        prior = SpikeSlabPrior(slab_scale=0.1, noise_sigma=1.0, dim=2)

        fitted = cavi_fit(prior, design, response)
        assert fitted.gamma[0] > 0.99
        assert fitted.gamma[1] < 0.01
        exact = exact_posterior(prior, design, response)
        assert exact.inclusion_probs[0] > 0.99
        assert exact.inclusion_probs[1] < 0.01

    def test_elbo_monotone_over_random_fits(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            design = rng.standard_normal((30, 10))
            beta = np.zeros(10)
            beta[rng.choice(10, size=2, replace=False)] = rng.uniform(0.5, 2.0, size=2)
            response = design @ beta + 0.5 * rng.standard_normal(30)
            prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=0.5, dim=10)
            trace = np.asarray(cavi_fit(prior, design, response, tol=1e-10, max_sweeps=50).elbo_trace)
            assert np.all(np.diff(trace) >= -1e-8)

    def test_warm_start_and_init_shapes(self, rng):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=1.0, dim=3)
        design = rng.standard_normal((20, 3))
        response = design @ np.array([1.0, 0.0, 0.0]) + rng.standard_normal(20)
        first = cavi_fit(prior, design, response, tol=1e-10)
        again = cavi_fit(prior, design, response, init=first, tol=1e-10)
        np.testing.assert_allclose(posterior_mean(again), posterior_mean(first), atol=1e-3)
        with pytest.raises(InputError):
            cavi_fit(prior, design, response, init=np.zeros(4))
        with pytest.raises(InputError):
            cavi_fit(prior, design, response[:-1])

    def test_non_convergence_is_flagged(self, rng):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=1.0, dim=20)
        design = rng.standard_normal((15, 20))
        response = design[:, :3].sum(axis=1) + rng.standard_normal(15)
        fitted = cavi_fit(prior, design, response, tol=1e-15, max_sweeps=1)
        assert not fitted.converged
        assert fitted.sweeps == 1
        assert len(fitted.elbo_trace) == 1

    def test_posterior_invariants(self, rng):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=0.5, dim=8)
        design = rng.standard_normal((25, 8))
        fitted = cavi_fit(prior, design, design[:, 0] + 0.5 * rng.standard_normal(25))
        assert np.all((fitted.gamma >= 0) & (fitted.gamma <= 1))
        assert np.all(fitted.sdev > 0)


class TestElbo:
    def test_all_spike_posterior(self, rng):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=0.7, dim=3)
        design = rng.standard_normal((6, 3))
        response = rng.standard_normal(6)
        posterior = SpikeSlabPosterior(mu=rng.standard_normal(3), sdev=np.ones(3), gamma=np.zeros(3))
        n = 6
        expected = (
            -0.5 * n * math.log(2 * math.pi * 0.49)
            - response @ response / (2 * 0.49)
            + 3 * math.log1p(-prior.inclusion_prob)
        )
        assert elbo(prior, design, response, posterior) == pytest.approx(expected, rel=1e-12)

    def test_lower_bounds_log_evidence_one_dim(self, rng):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=1.0, dim=1)
        design = rng.standard_normal((5, 1))
        response = 0.8 * design[:, 0] + rng.standard_normal(5)
        fitted = cavi_fit(prior, design, response)
        exact = exact_posterior(prior, design, response)
        assert fitted.elbo_trace[-1] <= exact.log_evidence + 1e-9

    def test_lower_bounds_log_evidence_two_dim(self):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=1.0, dim=2)
        for seed in range(5):
            design, response = _two_dim_instance(seed, n=12, beta=(1.0, -0.5))
            fitted = cavi_fit(prior, design, response)
            exact = exact_posterior(prior, design, response)
            assert elbo(prior, design, response, fitted) <= exact.log_evidence + 1e-9

    def test_exact_posterior_dimension_limit(self, rng):
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=1.0, dim=3)
        with pytest.raises(ConfigurationError):
            exact_posterior(prior, rng.standard_normal((4, 3)), rng.standard_normal(4))


class TestSampling:
    def test_all_spikes_sample_zero(self, rng):
        posterior = SpikeSlabPosterior(mu=np.ones(4), sdev=np.ones(4), gamma=np.zeros(4))
        assert np.all(sample_posterior(posterior, rng) == 0.0)
        assert np.all(posterior_mean(posterior) == 0.0)

    def test_degenerate_slab_returns_mu(self, rng):
        mu = np.array([1.5, -2.0, 0.25])
        posterior = SpikeSlabPosterior(mu=mu, sdev=np.full(3, 1e-12), gamma=np.ones(3))
        np.testing.assert_allclose(sample_posterior(posterior, rng), mu, atol=1e-9)
        np.testing.assert_array_equal(posterior_mean(posterior), mu)

    def test_inclusion_frequency(self, rng):
        posterior = SpikeSlabPosterior(mu=np.full(3, 2.0), sdev=np.full(3, 0.1), gamma=np.full(3, 0.5))
        draws = np.array([sample_posterior(posterior, rng) for _ in range(200_000)])
        frequency = (draws != 0.0).mean(axis=0)
        assert np.all((frequency >= 0.495) & (frequency <= 0.505))

    def test_conditional_moments(self, rng):
        posterior = SpikeSlabPosterior(mu=np.array([1.0, -3.0]), sdev=np.array([0.5, 2.0]), gamma=np.array([0.3, 0.8]))
        draws = np.array([sample_posterior(posterior, rng) for _ in range(60_000)])
        for j in range(2):
            included = draws[draws[:, j] != 0.0, j]
            se = posterior.sdev[j] / math.sqrt(len(included))
            assert abs(included.mean() - posterior.mu[j]) < 4 * se
            assert abs(included.var() / posterior.sdev[j] ** 2 - 1.0) < 4 * math.sqrt(2.0 / len(included))


class TestLambdaSchedule:
    def test_theory_mode(self):
        base = math.sqrt(2 * 2 * (math.log(10) + math.log(2)))
        value = lambda_schedule(2, 10, 1.0, TheoryLambda())
        assert value == pytest.approx(11.0 / 6.0 * base)
        assert value == pytest.approx(6.346, abs=2e-3)
        assert 5.0 / 3.0 * base <= value <= 2.0 * base

    def test_practical_sqrt(self):
        assert lambda_schedule(4, 10, 1.0, PracticalSqrt(0.5)) == pytest.approx(1.0)

    def test_constant(self):
        for t in (1, 10, 1000):
            assert lambda_schedule(t, 50, 1.0, ConstantLambda()) == 1.0

    def test_invalid_round(self):
        with pytest.raises(ConfigurationError):
            lambda_schedule(0, 10, 1.0, ConstantLambda())
        with pytest.raises(ConfigurationError):
            lambda_schedule(3, 1, 1.0, TheoryLambda())
