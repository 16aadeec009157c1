"""Empirical margin exponent: how much probability sits near a reward tie."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from config.settings import settings
from environments.bandit_env import EnvSpec, sample_contexts
from utils.errors import ConfigurationError


@dataclass
class MarginFit:
    """omega = +inf when no gap ever falls inside the grid."""

    omega: float
    log_scale: float
    h_grid: np.ndarray
    probabilities: np.ndarray
    counts: np.ndarray
    used: np.ndarray

    @property
    def deterministic_gap(self) -> bool:
        return math.isinf(self.omega)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"h": self.h_grid, "probability": self.probabilities, "events": self.counts, "used": self.used}
        )


def reward_gaps(env: EnvSpec, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Best mean reward minus runner-up, one value per sampled context set."""
    gaps = np.empty(samples)
    for i in range(samples):
        means = sample_contexts(env, rng, i + 1).vectors @ env.beta_star
        if means.shape[0] < 2:
            gaps[i] = math.inf
            continue
        top_two = np.partition(means, -2)[-2:]
        gaps[i] = top_two[1] - top_two[0]
    return gaps


def fit_margin_exponent(gaps: np.ndarray, h_grid: np.ndarray, min_events: Optional[int] = None) -> MarginFit:
    """Least-squares slope of log P(gap <= h) on log h.

    Grid points with fewer than ``min_events`` events are dropped; if fewer
    than two points survive, every point with at least one event is used.
    """
    min_events = settings.margin_min_events if min_events is None else min_events
    gaps = np.asarray(gaps, dtype=float)
    h_grid = np.asarray(h_grid, dtype=float)
    if h_grid.ndim != 1 or h_grid.size == 0 or np.any(h_grid <= 0):
        raise ConfigurationError("h grid must be a nonempty vector of positive values")
    counts = (gaps[:, None] <= h_grid[None, :]).sum(axis=0)
    probabilities = counts / gaps.shape[0]

    used = counts >= min_events
    if used.sum() < 2:
        used = counts > 0
    if not used.any():
        return MarginFit(math.inf, math.nan, h_grid, probabilities, counts, used)
    log_h = np.log(h_grid[used])
    log_p = np.log(probabilities[used])
    if used.sum() == 1:
        # A single point pins the slope through P(gap <= 1) = 1.
        omega = float(log_p[0] / log_h[0]) if log_h[0] != 0 else 0.0
        return MarginFit(omega, 0.0, h_grid, probabilities, counts, used)
    slope, intercept = np.polyfit(log_h, log_p, 1)
    return MarginFit(float(slope), float(intercept), h_grid, probabilities, counts, used)


def margin_exponent(env: EnvSpec, h_grid: np.ndarray, samples: int = 10_000, seed: int = 0) -> MarginFit:
    """Monte Carlo estimate of the margin exponent omega for ``env``."""
    if samples < 1000:
        raise ConfigurationError(f"margin estimation needs at least 1000 samples, got {samples}")
    rng = np.random.default_rng(seed)
    return fit_margin_exponent(reward_gaps(env, samples, rng), h_grid)
