"""Build environments from validated config blocks."""

from __future__ import annotations

from config.experiment import EnvConfig
from environments.bandit_env import (
    AutoRegressive,
    ContextDistribution,
    EnvSpec,
    EquiCorrelated,
    TruncatedGaussian,
    generate_beta,
)
from environments.dataset_env import dataset_env
from utils.data_loader import load_bundle
from utils.logger import get_logger
from utils.seeding import make_rng, stable_seed

logger = get_logger(__name__)


def context_distribution(cfg: EnvConfig) -> ContextDistribution:
    if cfg.context == "equicorrelated":
        return EquiCorrelated(cfg.rho)
    if cfg.context == "autoregressive":
        return AutoRegressive(cfg.phi)
    return TruncatedGaussian(cfg.x_max)


def build_environment(cfg: EnvConfig) -> EnvSpec:
    """Synthetic environments draw beta_star from ``beta_seed``; dataset ones ingest the file."""
    if cfg.kind == "dataset":
        bundle = load_bundle(cfg.dataset_path, cfg.label_column, cfg.transform, cfg.reference_sparsity)
        return dataset_env(bundle, noise_sigma=cfg.dataset_noise_sigma)

    beta = generate_beta(cfg.dim, cfg.sparsity, cfg.beta_scheme, make_rng(stable_seed("beta", cfg.beta_seed)))
    env = EnvSpec(
        num_arms=cfg.num_arms,
        dim=cfg.dim,
        context_dist=context_distribution(cfg),
        beta_star=beta,
        noise_sigma=cfg.noise_sigma,
        clip_x_max=cfg.clip_x_max,
        noise_law=cfg.noise_law,
    )
    logger.debug("Built synthetic environment", arms=env.num_arms, dim=env.dim, sparsity=env.sparsity)
    return env
