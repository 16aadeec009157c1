"""Shared fixtures for the test suite."""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
import pytest

from config.experiment import parse_config
from environments.bandit_env import EnvSpec, EquiCorrelated, generate_beta


@dataclass(frozen=True, eq=False)
class FixedContexts:
    """Context law that returns the same K x d matrix every round."""

    vectors: np.ndarray

    def sample(self, rng: np.random.Generator, num_arms: int, dim: int) -> np.ndarray:
        return np.array(self.vectors, dtype=float)


def fixed_env(vectors, beta_star, noise_sigma: float = 0.0) -> EnvSpec:
    vectors = np.asarray(vectors, dtype=float)
    return EnvSpec(
        num_arms=vectors.shape[0],
        dim=vectors.shape[1],
        context_dist=FixedContexts(vectors),
        beta_star=np.asarray(beta_star, dtype=float),
        noise_sigma=noise_sigma,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def small_env() -> EnvSpec:
    beta = generate_beta(8, 2, "setup1", np.random.default_rng(3))
    return EnvSpec(num_arms=3, dim=8, context_dist=EquiCorrelated(0.3), beta_star=beta, noise_sigma=0.5)


@pytest.fixture
def quick_config_data(tmp_path) -> Dict[str, Any]:
    return {
        "name": "unit",
        "env": {"num_arms": 3, "dim": 8, "sparsity": 2, "noise_sigma": 0.5, "beta_seed": 5},
        "policies": [
            {"policy": "vbts"},
            {"policy": "lints"},
            {"policy": "oracle"},
            {"policy": "uniform"},
        ],
        "horizon": 25,
        "replications": 2,
        "base_seed": 17,
        "output_dir": str(tmp_path / "run"),
    }


@pytest.fixture
def quick_config(quick_config_data):
    return parse_config(quick_config_data)


def random_psd(rng: np.random.Generator, dim: int) -> np.ndarray:
    factor = rng.standard_normal((dim, dim))
    gram = factor @ factor.T / dim
    return 0.5 * (gram + gram.T)
