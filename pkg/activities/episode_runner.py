"""One (policy, replication) cell of an experiment."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from config.experiment import ExperimentConfig, PolicyConfig
from environments.bandit_env import EnvSpec
from policies.episode import RegretTrace, run_episode
from policies.registry import build_policy
from utils.logger import get_logger
from utils.seeding import make_rng, stable_seed

logger = get_logger(__name__)


@dataclass
class CellResult:
    policy: str
    replication: int
    status: str
    seconds: float
    trace: Optional[RegretTrace] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == "completed"


def cell_seeds(config: ExperimentConfig, label: str, replication: int):
    """(policy seed, environment seed) for one cell.

    Policy streams depend on the label so adding a policy never perturbs
    the others. With a common environment every policy in a replication
    sees the same contexts and noise.
    """
    policy_seed = stable_seed(config.base_seed, label, replication)
    if config.common_environment:
        env_seed = stable_seed(config.base_seed, "environment", replication)
    else:
        env_seed = stable_seed(config.base_seed, "environment", label, replication)
    return policy_seed, env_seed


def run_cell(config: ExperimentConfig, policy_cfg: PolicyConfig, env: EnvSpec, replication: int) -> CellResult:
    label = policy_cfg.display_name
    started = time.perf_counter()
    logger.info("Running cell", policy=label, replication=replication, horizon=config.horizon)
    try:
        policy = build_policy(policy_cfg, env, config.horizon)
        policy_seed, env_seed = cell_seeds(config, label, replication)
        with logger.span("bandit.cell", policy=label, replication=replication):
            trace = run_episode(
                policy,
                env,
                config.horizon,
                make_rng(policy_seed),
                env_rng=make_rng(env_seed),
                replication=replication,
                record_noise=config.record_noise,
                log_every=config.log_every,
            )
    except Exception as exc:  # noqa: BLE001 - recorded in the manifest
        logger.error("Cell failed", policy=label, replication=replication, error=str(exc))
        return CellResult(label, replication, "failed", time.perf_counter() - started, error=f"{type(exc).__name__}: {exc}")

    seconds = time.perf_counter() - started
    status = "completed" if trace.completed else "failed"
    return CellResult(label, replication, status, seconds, trace=trace, error=trace.error)
