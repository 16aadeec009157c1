"""Map validated policy blocks to policy instances."""

from __future__ import annotations

from typing import Callable, Dict

from config.experiment import (
    ESTCConfig,
    LassoL1Config,
    LinTSConfig,
    LinUCBConfig,
    OracleConfig,
    PolicyConfig,
    UniformConfig,
    VBTSConfig,
)
from environments.bandit_env import EnvSpec
from policies.base import Policy
from policies.linear import LinTSPolicy, LinUCBPolicy
from policies.reference import OraclePolicy, UniformPolicy
from policies.sparse import ESTCPolicy, LassoL1Policy, default_explore_len
from policies.vbts import VBTSPolicy
from utils.errors import ConfigurationError


def _likelihood_sigma(env: EnvSpec) -> float:
    # VB and lasso tuning need a positive scale even when the environment is noise-free.
    return env.noise_sigma if env.noise_sigma > 0 else 1.0


def _vbts(cfg: VBTSConfig, env: EnvSpec, horizon: int) -> Policy:
    return VBTSPolicy(
        env.num_arms,
        env.dim,
        noise_sigma=cfg.noise_sigma or _likelihood_sigma(env),
        lambda_mode=cfg.schedule(),
        x_max=cfg.x_max,
        inclusion_exponent=cfg.inclusion_exponent,
        inclusion_a0=cfg.inclusion_a0,
        refit_every=cfg.refit_every,
        tol=cfg.tol,
        max_sweeps=cfg.max_sweeps,
        label=cfg.display_name,
    )


def _lints(cfg: LinTSConfig, env: EnvSpec, horizon: int) -> Policy:
    return LinTSPolicy(env.num_arms, env.dim, scale=cfg.scale, label=cfg.display_name)


def _linucb(cfg: LinUCBConfig, env: EnvSpec, horizon: int) -> Policy:
    return LinUCBPolicy(env.num_arms, env.dim, alpha=cfg.alpha, label=cfg.display_name)


def _estc(cfg: ESTCConfig, env: EnvSpec, horizon: int) -> Policy:
    explore_len = default_explore_len(horizon) if cfg.explore_len is None else cfg.explore_len
    return ESTCPolicy(
        env.num_arms,
        env.dim,
        explore_len=explore_len,
        noise_sigma=_likelihood_sigma(env) if cfg.noise_sigma is None else cfg.noise_sigma,
        x_max=cfg.x_max,
        horizon=horizon,
        label=cfg.display_name,
    )


def _lasso_l1(cfg: LassoL1Config, env: EnvSpec, horizon: int) -> Policy:
    return LassoL1Policy(
        env.num_arms,
        env.dim,
        sparsity=max(env.sparsity, 1) if cfg.sparsity is None else cfg.sparsity,
        radius_scale=cfg.radius_scale,
        noise_sigma=_likelihood_sigma(env) if cfg.noise_sigma is None else cfg.noise_sigma,
        x_max=cfg.x_max,
        label=cfg.display_name,
    )


def _oracle(cfg: OracleConfig, env: EnvSpec, horizon: int) -> Policy:
    return OraclePolicy(env.num_arms, env.dim, env.beta_star, label=cfg.display_name)


def _uniform(cfg: UniformConfig, env: EnvSpec, horizon: int) -> Policy:
    return UniformPolicy(env.num_arms, env.dim, label=cfg.display_name)


POLICY_BUILDERS: Dict[str, Callable[..., Policy]] = {
    "vbts": _vbts,
    "lints": _lints,
    "linucb": _linucb,
    "estc": _estc,
    "lasso_l1": _lasso_l1,
    "oracle": _oracle,
    "uniform": _uniform,
}


def build_policy(cfg: PolicyConfig, env: EnvSpec, horizon: int) -> Policy:
    try:
        builder = POLICY_BUILDERS[cfg.policy]
    except KeyError:
        raise ConfigurationError(f"unregistered policy {cfg.policy!r}") from None
    return builder(cfg, env, horizon)
