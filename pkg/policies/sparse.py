"""Lasso-based baselines: explore-the-sparsity-then-commit and the l1 confidence ball."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from environments.bandit_env import ContextSet
from models.sparse_linear import RegressionProblem, default_penalty, lasso_fit
from policies.base import Policy, greedy_arm
from utils.logger import get_logger

logger = get_logger(__name__)


def default_explore_len(horizon: int) -> int:
    return int(math.ceil(horizon ** (2.0 / 3.0)))


class ESTCPolicy(Policy):
    """Uniform exploration for n0 rounds, one lasso fit, then greedy commitment."""

    name = "estc"
    uniform_first_round = False

    def __init__(
        self,
        num_arms: int,
        dim: int,
        explore_len: int,
        noise_sigma: float = 1.0,
        x_max: float = 1.0,
        horizon: Optional[int] = None,
        label: Optional[str] = None,
    ):
        super().__init__(num_arms, dim, label)
        self.explore_len = explore_len
        self.noise_sigma = noise_sigma
        self.x_max = x_max
        self.estimate: Optional[np.ndarray] = None
        if horizon is not None and explore_len >= horizon:
            logger.warning(
                "ESTC exploration covers the whole horizon; the policy never commits",
                explore_len=explore_len,
                horizon=horizon,
            )

    def commit(self) -> np.ndarray:
        history = self.state.history
        n = len(history)
        if n == 0:
            self.estimate = np.zeros(self.dim)
        else:
            penalty = default_penalty(self.noise_sigma, self.x_max, self.dim, n)
            self.estimate = lasso_fit(RegressionProblem(history.design, history.rewards, penalty)).coefficients
        logger.debug("ESTC committed", rounds=n, support=int(np.count_nonzero(self.estimate)))
        return self.estimate

    def _choose(self, ctx: ContextSet, rng: np.random.Generator) -> int:
        if self.state.round <= self.explore_len:
            self.flags.append("explore")
            return int(rng.integers(ctx.num_arms))
        if self.estimate is None:
            self.commit()
            self.flags.append("commit")
        return greedy_arm(ctx.vectors @ self.estimate)

    def posterior_mean(self) -> np.ndarray:
        return np.zeros(self.dim) if self.estimate is None else self.estimate


class LassoL1Policy(Policy):
    """Optimism over the l1 ball {beta : ||beta - beta_hat||_1 <= radius_t}.

    The maximum of <x, beta> over the ball is <x, beta_hat> + radius_t ||x||_inf,
    attained at a signed vertex.
    """

    name = "lasso_l1"

    def __init__(
        self,
        num_arms: int,
        dim: int,
        sparsity: int,
        radius_scale: float = 1.0,
        noise_sigma: float = 1.0,
        x_max: float = 1.0,
        label: Optional[str] = None,
    ):
        super().__init__(num_arms, dim, label)
        self.sparsity = sparsity
        self.radius_scale = radius_scale
        self.noise_sigma = noise_sigma
        self.x_max = x_max
        self.estimate = np.zeros(dim)

    def radius(self, t: int) -> float:
        return self.radius_scale * self.sparsity * math.sqrt((math.log(self.dim) + math.log(t)) / t)

    def refit(self) -> np.ndarray:
        history = self.state.history
        if len(history) == 0:
            return self.estimate
        penalty = default_penalty(self.noise_sigma, self.x_max, self.dim, len(history))
        problem = RegressionProblem(history.design, history.rewards, penalty)
        self.estimate = lasso_fit(problem, init=self.estimate).coefficients
        return self.estimate

    @staticmethod
    def optimistic_scores(vectors: np.ndarray, estimate: np.ndarray, radius: float) -> np.ndarray:
        return vectors @ estimate + radius * np.abs(vectors).max(axis=1)

    def _choose(self, ctx: ContextSet, rng: np.random.Generator) -> int:
        self.refit()
        scores = self.optimistic_scores(ctx.vectors, self.estimate, self.radius(self.state.round))
        return greedy_arm(scores)

    def posterior_mean(self) -> np.ndarray:
        return self.estimate
