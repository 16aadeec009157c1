"""Policy interface shared by every bandit agent."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import ClassVar, List, Optional

import numpy as np

from environments.bandit_env import ContextSet


class HistoryBuffer:
    """Growing (context, reward) record of the chosen arms only."""

    def __init__(self, dim: int, capacity: int = 64):
        self._contexts = np.empty((capacity, dim))
        self._rewards = np.empty(capacity)
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def append(self, x: np.ndarray, reward: float) -> None:
        if self._size == self._rewards.shape[0]:
            grow = 2 * self._rewards.shape[0]
            self._contexts = np.resize(self._contexts, (grow, self._contexts.shape[1]))
            self._rewards = np.resize(self._rewards, grow)
        self._contexts[self._size] = x
        self._rewards[self._size] = reward
        self._size += 1

    @property
    def design(self) -> np.ndarray:
        return self._contexts[: self._size]

    @property
    def rewards(self) -> np.ndarray:
        return self._rewards[: self._size]


class PolicyState:
    """Round counter and bandit-feedback history H_{t-1}."""

    def __init__(self, dim: int):
        self.round = 1
        self.history = HistoryBuffer(dim)


def greedy_arm(scores: np.ndarray) -> int:
    """argmax with the lowest index winning ties."""
    return int(np.argmax(scores))


class Policy(ABC):
    """observe contexts -> select arm -> receive reward."""

    name: ClassVar[str] = "policy"
    uniform_first_round: ClassVar[bool] = True

    def __init__(self, num_arms: int, dim: int, label: Optional[str] = None):
        self.num_arms = num_arms
        self.dim = dim
        self.label = label or self.name
        self.state = PolicyState(dim)
        self.flags: List[str] = []

    @property
    def round(self) -> int:
        return self.state.round

    def select(self, ctx: ContextSet, rng: np.random.Generator) -> int:
        self.flags = []
        if self.uniform_first_round and self.state.round <= 1:
            self.flags.append("uniform")
            return int(rng.integers(ctx.num_arms))
        return self._choose(ctx, rng)

    def update(self, x: np.ndarray, reward: float) -> None:
        self.state.history.append(x, reward)
        self._absorb(x, reward)
        self.state.round += 1

    @abstractmethod
    def _choose(self, ctx: ContextSet, rng: np.random.Generator) -> int:
        ...

    def _absorb(self, x: np.ndarray, reward: float) -> None:
        """Hook for incremental sufficient statistics."""

    def posterior_mean(self) -> Optional[np.ndarray]:
        return None
