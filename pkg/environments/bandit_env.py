"""Stochastic linear contextual bandit environments.

An :class:`EnvSpec` is immutable. All randomness flows through explicit
``numpy.random.Generator`` arguments, so replications can run in parallel
without sharing state.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Optional, Tuple, Union

import numpy as np
from scipy import linalg, stats

from utils.errors import ConfigurationError, InputError

if TYPE_CHECKING:
    from utils.data_loader import DatasetBundle


class NoiseLaw(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    RADEMACHER = "rademacher"


class BetaScheme(str, Enum):
    SETUP1 = "setup1"
    SETUP2 = "setup2"


@dataclass(frozen=True)
class EquiCorrelated:
    """Gaussian contexts with unit variances and common correlation rho."""

    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ConfigurationError(f"equicorrelation rho must lie in [0, 1), got {self.rho}")

    def covariance(self, dim: int) -> np.ndarray:
        cov = np.full((dim, dim), self.rho)
        np.fill_diagonal(cov, 1.0)
        return cov

    def sample(self, rng: np.random.Generator, num_arms: int, dim: int) -> np.ndarray:
        # (1 - rho) I + rho 11^T is an identity plus a shared scalar factor
        z = rng.standard_normal((num_arms, dim))
        shared = rng.standard_normal((num_arms, 1))
        return np.sqrt(1.0 - self.rho) * z + np.sqrt(self.rho) * shared


@dataclass(frozen=True)
class AutoRegressive:
    """Stationary AR(1) Gaussian contexts, Sigma_ij = phi^|i-j|."""

    phi: float

    def __post_init__(self):
        if not -1.0 < self.phi < 1.0:
            raise ConfigurationError(f"autoregressive phi must lie in (-1, 1), got {self.phi}")

    def covariance(self, dim: int) -> np.ndarray:
        return linalg.toeplitz(self.phi ** np.arange(dim))

    def sample(self, rng: np.random.Generator, num_arms: int, dim: int) -> np.ndarray:
        factor = _ar1_factor(self.phi, dim)
        return rng.standard_normal((num_arms, dim)) @ factor.T


@dataclass(frozen=True)
class TruncatedGaussian:
    """Independent standard normal coordinates truncated to [-x_max, x_max]."""

    x_max: float

    def __post_init__(self):
        if self.x_max <= 0:
            raise ConfigurationError(f"truncation bound must be positive, got {self.x_max}")

    def covariance(self, dim: int) -> np.ndarray:
        var = stats.truncnorm.var(-self.x_max, self.x_max)
        return var * np.eye(dim)

    def sample(self, rng: np.random.Generator, num_arms: int, dim: int) -> np.ndarray:
        return stats.truncnorm.rvs(
            -self.x_max, self.x_max, size=(num_arms, dim), random_state=rng
        )


@dataclass(frozen=True, eq=False)
class DatasetPairs:
    """One row from each class per round, in random arm order."""

    bundle: "DatasetBundle"

    def sample(self, rng: np.random.Generator, num_arms: int, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        positives = self.bundle.class_indices[1]
        negatives = self.bundle.class_indices[0]
        pos_row = positives[rng.integers(len(positives))]
        neg_row = negatives[rng.integers(len(negatives))]
        if rng.integers(2) == 0:
            rows, labels = [pos_row, neg_row], [1, 0]
        else:
            rows, labels = [neg_row, pos_row], [0, 1]
        return self.bundle.features[rows], np.asarray(labels, dtype=np.int8)


ContextDistribution = Union[EquiCorrelated, AutoRegressive, TruncatedGaussian, DatasetPairs]


@functools.lru_cache(maxsize=8)
def _ar1_factor(phi: float, dim: int) -> np.ndarray:
    cov = linalg.toeplitz(phi ** np.arange(dim))
    return linalg.cholesky(cov, lower=True)


@dataclass(frozen=True, eq=False)
class EnvSpec:
    """A K-armed linear bandit with reward x^T beta_star + noise."""

    num_arms: int
    dim: int
    context_dist: ContextDistribution
    beta_star: np.ndarray
    noise_sigma: float
    clip_x_max: Optional[float] = None
    noise_law: NoiseLaw = NoiseLaw.GAUSSIAN

    def __post_init__(self):
        if self.num_arms < 1:
            raise ConfigurationError(f"num_arms must be >= 1, got {self.num_arms}")
        if self.dim < 1:
            raise ConfigurationError(f"dim must be >= 1, got {self.dim}")
        beta = np.array(self.beta_star, dtype=float)
        if beta.shape != (self.dim,):
            raise ConfigurationError(
                f"beta_star has shape {beta.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(beta)):
            raise InputError("beta_star contains non-finite entries")
        beta.setflags(write=False)
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "noise_law", NoiseLaw(self.noise_law))
        if self.noise_sigma < 0:
            raise ConfigurationError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")
        if self.clip_x_max is not None and self.clip_x_max <= 0:
            raise ConfigurationError(f"clip_x_max must be positive, got {self.clip_x_max}")
        if isinstance(self.context_dist, DatasetPairs):
            n_features = self.context_dist.bundle.features.shape[1]
            if n_features != self.dim:
                raise ConfigurationError(
                    f"dataset has {n_features} features but the environment declares dim={self.dim}"
                )
            if self.num_arms != 2:
                raise ConfigurationError("dataset environments always have exactly 2 arms")

    @property
    def sparsity(self) -> int:
        return int(np.count_nonzero(self.beta_star))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta_star)


@dataclass(frozen=True, eq=False)
class ContextSet:
    """The K context vectors revealed at round t."""

    round: int
    vectors: np.ndarray
    labels: Optional[np.ndarray] = None

    @property
    def num_arms(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class RoundOutcome:
    chosen_arm: int
    reward: float
    oracle_arm: int
    instantaneous_regret: float
    noise_draw: Optional[float] = field(default=None)


def sample_contexts(spec: EnvSpec, rng: np.random.Generator, t: int) -> ContextSet:
    """Draw the context set for round ``t``."""
    labels = None
    if isinstance(spec.context_dist, DatasetPairs):
        vectors, labels = spec.context_dist.sample(rng, spec.num_arms, spec.dim)
    else:
        vectors = spec.context_dist.sample(rng, spec.num_arms, spec.dim)
    if spec.clip_x_max is not None:
        vectors = np.clip(vectors, -spec.clip_x_max, spec.clip_x_max)
    return ContextSet(round=t, vectors=np.asarray(vectors, dtype=float), labels=labels)


def draw_noise(spec: EnvSpec, rng: np.random.Generator) -> float:
    sigma = spec.noise_sigma
    if spec.noise_law is NoiseLaw.GAUSSIAN:
        return float(rng.normal(0.0, sigma))
    if spec.noise_law is NoiseLaw.UNIFORM:
        half_width = sigma * np.sqrt(3.0)
        return float(rng.uniform(-half_width, half_width))
    return float(sigma * (2 * rng.integers(2) - 1))


def realize_reward(spec: EnvSpec, x_chosen: np.ndarray, rng: np.random.Generator) -> Tuple[float, float]:
    """Return (reward, noise) for the chosen context vector."""
    x_chosen = np.asarray(x_chosen, dtype=float)
    if x_chosen.shape != (spec.dim,):
        raise InputError(f"context has shape {x_chosen.shape}, expected ({spec.dim},)")
    noise = draw_noise(spec, rng)
    return float(x_chosen @ spec.beta_star) + noise, noise


def score_round(
    spec: EnvSpec,
    ctx: ContextSet,
    chosen: int,
    reward: Optional[float] = None,
    noise: Optional[float] = None,
) -> RoundOutcome:
    """Score a choice against the oracle arm (lowest index on ties)."""
    if not 0 <= chosen < ctx.num_arms:
        raise InputError(f"arm {chosen} outside [0, {ctx.num_arms})")
    means = ctx.vectors @ spec.beta_star
    oracle = int(np.argmax(means))
    regret = float(means[oracle] - means[chosen])
    return RoundOutcome(
        chosen_arm=int(chosen),
        reward=float(means[chosen]) if reward is None else float(reward),
        oracle_arm=oracle,
        instantaneous_regret=regret,
        noise_draw=noise,
    )


def generate_beta(dim: int, sparsity: int, scheme: Union[BetaScheme, str], rng: np.random.Generator) -> np.ndarray:
    """Unit-norm s-sparse parameter with a uniformly drawn support."""
    if not 1 <= sparsity <= dim:
        raise ConfigurationError(f"sparsity must lie in [1, {dim}], got {sparsity}")
    scheme = BetaScheme(scheme)
    support = np.sort(rng.choice(dim, size=sparsity, replace=False))
    if scheme is BetaScheme.SETUP1:
        values = rng.uniform(0.3, 1.0, size=sparsity)
    else:
        values = rng.standard_normal(sparsity)
    beta = np.zeros(dim)
    beta[support] = values / np.linalg.norm(values)
    return beta
