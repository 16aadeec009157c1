"""Ridge-statistic baselines: linear Thompson sampling and LinUCB."""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy import linalg

from environments.bandit_env import ContextSet
from policies.base import Policy, greedy_arm


class RidgeStatistics:
    """B_t = I + sum x x^T and f_t = sum r x, with a per-update Cholesky cache."""

    def __init__(self, dim: int):
        self.gram = np.eye(dim)
        self.moment = np.zeros(dim)
        self._factor: Optional[np.ndarray] = None

    def add(self, x: np.ndarray, reward: float) -> None:
        self.gram += np.outer(x, x)
        self.moment += reward * x
        self._factor = None

    @property
    def factor(self) -> np.ndarray:
        """Lower Cholesky factor L with L L^T = B_t."""
        if self._factor is None:
            self._factor = linalg.cholesky(self.gram, lower=True)
        return self._factor

    def mean(self) -> np.ndarray:
        return linalg.cho_solve((self.factor, True), self.moment)

    def widths(self, vectors: np.ndarray) -> np.ndarray:
        """sqrt(x^T B^{-1} x) for each row."""
        whitened = linalg.solve_triangular(self.factor, vectors.T, lower=True)
        return np.sqrt(np.einsum("ij,ij->j", whitened, whitened))


class LinTSPolicy(Policy):
    """Thompson sampling from N(beta_hat, v^2 B_t^{-1})."""

    name = "lints"

    def __init__(self, num_arms: int, dim: int, scale: float = 1.0, label: Optional[str] = None):
        super().__init__(num_arms, dim, label)
        self.scale = scale
        self.stats = RidgeStatistics(dim)
        self.last_normal: Optional[np.ndarray] = None
        self.last_sample: Optional[np.ndarray] = None

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        # beta_hat + v L^{-T} z has covariance v^2 (L L^T)^{-1}
        z = rng.standard_normal(self.dim)
        offset = linalg.solve_triangular(self.stats.factor, z, lower=True, trans="T")
        self.last_normal = z
        self.last_sample = self.stats.mean() + self.scale * offset
        return self.last_sample

    def _choose(self, ctx: ContextSet, rng: np.random.Generator) -> int:
        return greedy_arm(ctx.vectors @ self.draw(rng))

    def _absorb(self, x: np.ndarray, reward: float) -> None:
        self.stats.add(x, reward)

    def posterior_mean(self) -> np.ndarray:
        return self.stats.mean()


class LinUCBPolicy(Policy):
    """Optimism: argmax <x, beta_hat> + alpha sqrt(x^T B^{-1} x)."""

    name = "linucb"

    def __init__(self, num_arms: int, dim: int, alpha: float = 1.0, label: Optional[str] = None):
        super().__init__(num_arms, dim, label)
        self.alpha = alpha
        self.stats = RidgeStatistics(dim)

    def ucb_scores(self, ctx: ContextSet) -> np.ndarray:
        scores = ctx.vectors @ self.stats.mean()
        if self.alpha != 0.0:
            scores = scores + self.alpha * self.stats.widths(ctx.vectors)
        return scores

    def _choose(self, ctx: ContextSet, rng: np.random.Generator) -> int:
        return greedy_arm(self.ucb_scores(ctx))

    def _absorb(self, x: np.ndarray, reward: float) -> None:
        self.stats.add(x, reward)

    def posterior_mean(self) -> np.ndarray:
        return self.stats.mean()
