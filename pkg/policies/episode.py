"""The observe -> select -> reward -> update loop and its regret record."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from environments.bandit_env import DatasetPairs, EnvSpec, realize_reward, sample_contexts, score_round
from environments.dataset_env import classification_accuracy
from policies.base import Policy
from utils.errors import ConfigurationError
from utils.logger import get_logger

logger = get_logger(__name__)

TRACE_COLUMNS = ["policy", "rep", "t", "regret", "cum_regret", "micros", "arm", "flags"]


@dataclass
class RegretTrace:
    """Per-round record of one (policy, replication) episode."""

    policy: str
    replication: int
    horizon: int
    regret: np.ndarray
    micros: np.ndarray
    arms: np.ndarray
    oracle_arms: np.ndarray
    flags: List[str]
    noise: Optional[np.ndarray] = None
    chosen_labels: Optional[np.ndarray] = None
    posterior_means: Dict[int, np.ndarray] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def rounds(self) -> np.ndarray:
        return np.arange(1, len(self.regret) + 1)

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def completed(self) -> bool:
        return self.error is None and len(self.regret) == self.horizon

    @property
    def total_seconds(self) -> float:
        return float(self.micros.sum()) / 1e6

    @property
    def accuracy(self) -> Optional[float]:
        """Fraction of rounds in which the class-1 row was chosen."""
        if self.chosen_labels is None or len(self.chosen_labels) == 0:
            return None
        return classification_accuracy(self.chosen_labels)

    def to_frame(self, record_micros: bool = False) -> pd.DataFrame:
        micros = self.micros if record_micros else np.zeros_like(self.micros)
        return pd.DataFrame(
            {
                "policy": self.policy,
                "rep": self.replication,
                "t": self.rounds,
                "regret": self.regret,
                "cum_regret": self.cum_regret,
                "micros": micros,
                "arm": self.arms,
                "flags": self.flags,
            },
            columns=TRACE_COLUMNS,
        )


def run_episode(
    policy: Policy,
    env: EnvSpec,
    horizon: int,
    rng: np.random.Generator,
    *,
    env_rng: Optional[np.random.Generator] = None,
    replication: int = 0,
    record_noise: bool = False,
    log_every: int = 0,
) -> RegretTrace:
    """Play ``horizon`` rounds of ``policy`` against ``env``.

    Contexts, reward noise and policy randomness use separate streams. When
    ``env_rng`` is given, contexts and noise come from it and ``rng`` feeds
    the policy only, so several policies can face identical environments.
    A policy exception ends the episode early; the partial trace keeps the
    completed rounds and the error text.
    """
    if horizon < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {horizon}")
    if env_rng is None:
        context_rng, noise_rng, policy_rng = rng.spawn(3)
    else:
        context_rng, noise_rng = env_rng.spawn(2)
        policy_rng = rng

    regret: List[float] = []
    micros: List[int] = []
    arms: List[int] = []
    oracle_arms: List[int] = []
    flags: List[str] = []
    noise_draws: List[float] = []
    labels: List[int] = []
    posterior_means: Dict[int, np.ndarray] = {}
    error = None

    for t in range(1, horizon + 1):
        ctx = sample_contexts(env, context_rng, t)
        started = time.perf_counter_ns()
        try:
            arm = policy.select(ctx, policy_rng)
            chosen = ctx.vectors[arm]
            reward, noise = realize_reward(env, chosen, noise_rng)
            policy.update(chosen, reward)
        except Exception as exc:  # noqa: BLE001 - recorded in the trace
            error = f"round {t}: {type(exc).__name__}: {exc}"
            logger.error("Episode aborted", policy=policy.label, replication=replication, round=t, error=str(exc))
            break
        elapsed = (time.perf_counter_ns() - started) // 1000

        outcome = score_round(env, ctx, arm, reward, noise)
        regret.append(outcome.instantaneous_regret)
        micros.append(elapsed)
        arms.append(outcome.chosen_arm)
        oracle_arms.append(outcome.oracle_arm)
        flags.append(";".join(policy.flags))
        if record_noise:
            noise_draws.append(noise)
        if ctx.labels is not None:
            labels.append(int(ctx.labels[arm]))
        if log_every and t % log_every == 0:
            estimate = policy.posterior_mean()
            if estimate is not None:
                posterior_means[t] = np.array(estimate, dtype=float)

    trace = RegretTrace(
        policy=policy.label,
        replication=replication,
        horizon=horizon,
        regret=np.asarray(regret, dtype=float),
        micros=np.asarray(micros, dtype=np.int64),
        arms=np.asarray(arms, dtype=int),
        oracle_arms=np.asarray(oracle_arms, dtype=int),
        flags=flags,
        noise=np.asarray(noise_draws) if record_noise else None,
        chosen_labels=np.asarray(labels, dtype=int) if isinstance(env.context_dist, DatasetPairs) else None,
        posterior_means=posterior_means,
        error=error,
    )
    logger.debug(
        "Episode finished",
        policy=policy.label,
        replication=replication,
        rounds=len(regret),
        cum_regret=float(trace.cum_regret[-1]) if regret else 0.0,
    )
    return trace
