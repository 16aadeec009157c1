"""Scaled end-to-end experiments. Deselect with ``-m "not slow"``."""

import numpy as np
import pytest

from config.experiment import parse_config
from diagnostics.contraction import contraction_rate
from diagnostics.design import sparse_eigen, transfer_bound_check
from environments.bandit_env import EquiCorrelated, generate_beta
from models.vb_spike_slab import SpikeSlabPrior, cavi_fit, elbo, exact_posterior, posterior_mean
from utils.data_loader import generate_mimic
from workflows.experiment_workflow import run_experiment

pytestmark = pytest.mark.slow


def _final_regrets(result, policy):
    return np.array([c.trace.cum_regret for c in result.cells if c.policy == policy and c.ok])


@pytest.fixture(scope="module")
def equicorrelated_run(tmp_path_factory):
    config = parse_config(
        {
            "name": "equicorrelated-acceptance",
            "env": {
                "num_arms": 5,
                "dim": 100,
                "sparsity": 3,
                "context": "equicorrelated",
                "rho": 0.3,
                "noise_sigma": 0.5,
                "beta_scheme": "setup1",
            },
            "policies": [{"policy": "vbts"}, {"policy": "lints"}, {"policy": "uniform"}],
            "horizon": 400,
            "replications": 20,
            "base_seed": 2024,
            "n_jobs": 4,
            "output_dir": str(tmp_path_factory.mktemp("equicorrelated")),
        }
    )
    return run_experiment(config)


def test_vbts_beats_lints_and_uniform(equicorrelated_run):
    assert equicorrelated_run.status == "completed"
    vbts = _final_regrets(equicorrelated_run, "vbts")[:, -1].mean()
    lints = _final_regrets(equicorrelated_run, "lints")[:, -1].mean()
    uniform = _final_regrets(equicorrelated_run, "uniform")[:, -1].mean()
    assert vbts < lints
    assert vbts < 0.5 * uniform


def test_vbts_regret_is_sublinear(equicorrelated_run):
    curves = _final_regrets(equicorrelated_run, "vbts")
    late = np.median(curves[:, 399] / 400)
    early = np.median(curves[:, 99] / 100)
    assert late < 0.6 * early


def test_cavi_against_quadrature_on_two_dim_instances():
    prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=1.0, dim=2)
    for seed in range(10):
        rng = np.random.default_rng(seed)
        design = rng.standard_normal((30, 2))
        response = design @ np.array([3.0, 0.0]) + rng.standard_normal(30)
        fitted = cavi_fit(prior, design, response)
        exact = exact_posterior(prior, design, response)
        assert np.max(np.abs(posterior_mean(fitted) - exact.posterior_mean)) < 0.05
        assert elbo(prior, design, response, fitted) <= exact.log_evidence + 1e-9


def test_offline_posterior_contraction():
    sizes = (50, 100, 200, 400)
    law = EquiCorrelated(0.3)
    errors = np.empty((20, len(sizes)))
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        beta = generate_beta(100, 3, "setup1", rng)
        design = law.sample(rng, max(sizes), 100)
        response = design @ beta + 0.5 * rng.standard_normal(max(sizes))
        prior = SpikeSlabPrior(slab_scale=1.0, noise_sigma=0.5, dim=100)
        for k, n in enumerate(sizes):
            fitted = cavi_fit(prior, design[:n], response[:n], max_sweeps=1000)
            errors[seed, k] = np.abs(posterior_mean(fitted) - beta).sum()
    medians = np.median(errors, axis=0)
    assert np.all(np.diff(medians) < 0)
    rate_ratio = contraction_rate(400, 100, 3) / contraction_rate(50, 100, 3)
    assert medians[-1] < rate_ratio * medians[0]
    assert medians[-1] < 0.35 * medians[0]


def test_transfer_slack_on_verified_instances():
    rng = np.random.default_rng(7)
    for _ in range(20):
        d = 6
        m = int(rng.integers(2, 5))
        beta = rng.uniform(0.0, 1.0 / m)
        scales = rng.uniform(0.5, 2.0, size=d)
        # S (I - beta J) S is nonnegative on every m-sparse direction
        difference = np.outer(scales, scales) * (np.eye(d) - beta * np.ones((d, d)))
        eta = rng.uniform(0.0, 0.5)
        factor = rng.standard_normal((d, d))
        gram_ref = factor @ factor.T / d
        gram_hat = (1.0 - eta) * gram_ref + difference
        assert sparse_eigen(difference, m).phi_min >= -1e-12
        check = transfer_bound_check(gram_hat, gram_ref, m, eta, np.diag(difference).copy(), samples=10_000)
        assert check.hypothesis_holds
        assert check.min_slack >= -1e-10


def test_expression_pipeline(tmp_path):
    csv = generate_mimic(tmp_path / "mimic.csv", seed=0)
    config = parse_config(
        {
            "name": "mimic-acceptance",
            "env": {
                "kind": "dataset",
                "dataset_path": str(csv),
                "label_column": "label",
                "transform": "log2",
                "reference_sparsity": 18,
            },
            "policies": [{"policy": "vbts"}, {"policy": "estc"}, {"policy": "uniform"}],
            "horizon": 200,
            "replications": 5,
            "base_seed": 11,
            "n_jobs": 3,
            "output_dir": str(tmp_path / "run"),
        }
    )
    result = run_experiment(config)
    assert result.status == "completed"
    accuracy = result.accuracy.groupby("policy")["accuracy"].mean()
    assert accuracy["vbts"] >= 0.5 + 0.15
    assert (config.output_path / "accuracy.csv").exists()


def test_parallel_equivalence_with_eight_workers(quick_config_data, tmp_path):
    quick_config_data["output_dir"] = str(tmp_path / "one")
    serial = run_experiment(parse_config(quick_config_data))
    quick_config_data.update(output_dir=str(tmp_path / "eight"), n_jobs=8)
    parallel = run_experiment(parse_config(quick_config_data))
    for name in sorted(p.name for p in (tmp_path / "one" / "traces").glob("*.csv")):
        assert (tmp_path / "one" / "traces" / name).read_bytes() == (tmp_path / "eight" / "traces" / name).read_bytes()
    assert serial.summary.equals(parallel.summary)
