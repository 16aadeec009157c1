"""Posterior contraction: l1 error of logged posterior means against the truth."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np
import pandas as pd

from policies.episode import RegretTrace

THEORY_SLOPE = -0.5


@dataclass
class ContractionTrace:
    rounds: np.ndarray
    errors: np.ndarray
    rates: np.ndarray
    slope: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.rounds, "l1_error": self.errors, "rate": self.rates})


def contraction_rate(t: int, dim: int, sparsity: int) -> float:
    """s * sqrt((log d + log t) / t)."""
    return sparsity * math.sqrt((math.log(dim) + math.log(t)) / t)


def contraction_trace(
    source: Union[RegretTrace, Mapping[int, np.ndarray]],
    beta_star: np.ndarray,
) -> ContractionTrace:
    """Per-round ||mean - beta*||_1 and the fitted log-log slope.

    The slope is descriptive; compare it with ``THEORY_SLOPE``. It is NaN
    when fewer than two rounds have positive error.
    """
    means = source.posterior_means if isinstance(source, RegretTrace) else source
    beta_star = np.asarray(beta_star, dtype=float)
    rounds = np.array(sorted(means), dtype=int)
    errors = np.array([np.abs(means[t] - beta_star).sum() for t in rounds], dtype=float)
    dim = beta_star.shape[0]
    sparsity = max(int(np.count_nonzero(beta_star)), 1)
    rates = np.array([contraction_rate(int(t), max(dim, 2), sparsity) for t in rounds])

    positive = errors > 0
    slope = math.nan
    if positive.sum() >= 2 and len(np.unique(rounds[positive])) >= 2:
        slope = float(np.polyfit(np.log(rounds[positive]), np.log(errors[positive]), 1)[0])
    return ContractionTrace(rounds=rounds, errors=errors, rates=rates, slope=slope)
