"""Variational Bayes Thompson sampling under the spike-and-slab Laplace prior."""

from __future__ import annotations

from typing import Optional

import numpy as np

from config.settings import settings
from environments.bandit_env import ContextSet
from models.vb_spike_slab import (
    ConstantLambda,
    LambdaMode,
    SpikeSlabPosterior,
    SpikeSlabPrior,
    cavi_fit,
    lambda_schedule,
    posterior_mean,
    sample_posterior,
)
from policies.base import Policy, greedy_arm
from utils.errors import ConfigurationError


class VBTSPolicy(Policy):
    """Refit the VB posterior on the history, draw once, act greedily on the draw.

    The posterior is refitted every ``refit_every`` rounds (1 = every round),
    each fit warm-started from the previous one. Rounds whose fit hit the
    sweep cap carry the ``cavi_nonconverged`` flag.
    """

    name = "vbts"

    def __init__(
        self,
        num_arms: int,
        dim: int,
        noise_sigma: float = 1.0,
        lambda_mode: Optional[LambdaMode] = None,
        x_max: float = 1.0,
        inclusion_exponent: float = 1.0,
        inclusion_a0: float = 1.0,
        refit_every: int = 1,
        tol: Optional[float] = None,
        max_sweeps: Optional[int] = None,
        label: Optional[str] = None,
    ):
        super().__init__(num_arms, dim, label)
        if refit_every < 1:
            raise ConfigurationError(f"refit_every must be >= 1, got {refit_every}")
        if noise_sigma <= 0:
            raise ConfigurationError(f"VBTS needs a positive noise sigma, got {noise_sigma}")
        self.noise_sigma = noise_sigma
        self.lambda_mode = lambda_mode or ConstantLambda()
        self.x_max = x_max
        self.inclusion_exponent = inclusion_exponent
        self.inclusion_a0 = inclusion_a0
        self.refit_every = refit_every
        self.tol = settings.cavi_tol if tol is None else tol
        self.max_sweeps = settings.cavi_bandit_sweeps if max_sweeps is None else max_sweeps
        self.posterior: Optional[SpikeSlabPosterior] = None
        self.last_sample: Optional[np.ndarray] = None
        self.last_scale: Optional[float] = None

    def prior_at(self, t: int) -> SpikeSlabPrior:
        scale = lambda_schedule(t, self.dim, self.x_max, self.lambda_mode)
        self.last_scale = scale
        return SpikeSlabPrior(
            slab_scale=scale,
            noise_sigma=self.noise_sigma,
            dim=self.dim,
            inclusion_exponent=self.inclusion_exponent,
            inclusion_a0=self.inclusion_a0,
        )

    def _due_for_refit(self) -> bool:
        return self.posterior is None or (self.state.round - 2) % self.refit_every == 0

    def refit(self) -> SpikeSlabPosterior:
        history = self.state.history
        self.posterior = cavi_fit(
            self.prior_at(self.state.round),
            history.design,
            history.rewards,
            init=self.posterior,
            tol=self.tol,
            max_sweeps=self.max_sweeps,
        )
        if not self.posterior.converged:
            self.flags.append("cavi_nonconverged")
        return self.posterior

    def _choose(self, ctx: ContextSet, rng: np.random.Generator) -> int:
        if self._due_for_refit():
            self.refit()
        else:
            self.flags.append("stale_posterior")
        self.last_sample = sample_posterior(self.posterior, rng)
        return greedy_arm(ctx.vectors @ self.last_sample)

    def posterior_mean(self) -> np.ndarray:
        if self.posterior is None:
            return np.zeros(self.dim)
        return posterior_mean(self.posterior)
