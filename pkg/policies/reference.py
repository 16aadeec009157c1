"""Comparator policies: the oracle and uniform random play."""

from __future__ import annotations

from typing import Optional

import numpy as np

from environments.bandit_env import ContextSet
from policies.base import Policy, greedy_arm


class OraclePolicy(Policy):
    """Always plays argmax <x, beta_star>; zero regret by construction."""

    name = "oracle"
    uniform_first_round = False

    def __init__(self, num_arms: int, dim: int, beta_star: np.ndarray, label: Optional[str] = None):
        super().__init__(num_arms, dim, label)
        self.beta_star = np.asarray(beta_star, dtype=float)

    def _choose(self, ctx: ContextSet, rng: np.random.Generator) -> int:
        return greedy_arm(ctx.vectors @ self.beta_star)

    def posterior_mean(self) -> np.ndarray:
        return self.beta_star


class UniformPolicy(Policy):
    name = "uniform"

    def _choose(self, ctx: ContextSet, rng: np.random.Generator) -> int:
        return int(rng.integers(ctx.num_arms))
