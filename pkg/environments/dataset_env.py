"""Two-armed environments built from a labeled dataset."""

from __future__ import annotations

from typing import Optional

import numpy as np

from environments.bandit_env import DatasetPairs, EnvSpec
from utils.data_loader import DatasetBundle
from utils.logger import get_logger

logger = get_logger(__name__)


def dataset_env(bundle: DatasetBundle, noise_sigma: Optional[float] = None) -> EnvSpec:
    """Each round offers one class-1 row and one class-0 row in random order.

    Rewards follow x^T beta_ref plus Gaussian noise at the fitted scale
    (overridable through ``noise_sigma``).
    """
    sigma = bundle.noise_scale if noise_sigma is None else noise_sigma
    env = EnvSpec(
        num_arms=2,
        dim=bundle.n_features,
        context_dist=DatasetPairs(bundle),
        beta_star=bundle.beta_ref,
        noise_sigma=sigma,
    )
    logger.debug("Built dataset environment", dim=env.dim, sparsity=env.sparsity, noise_sigma=sigma)
    return env


def classification_accuracy(chosen_labels: np.ndarray) -> float:
    """Fraction of rounds in which the class-1 row was chosen."""
    chosen_labels = np.asarray(chosen_labels)
    if chosen_labels.size == 0:
        return float("nan")
    return float(np.mean(chosen_labels == 1))
