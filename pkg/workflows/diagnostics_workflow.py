"""Design diagnostics on a simulated uniform-exploration design."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from activities.report_writer import write_frame
from config.experiment import ExperimentConfig
from diagnostics.design import DesignDiagnostics, diagnose_design
from diagnostics.margin import MarginFit, margin_exponent
from environments.bandit_env import sample_contexts
from environments.factory import build_environment
from utils.logger import get_logger
from utils.seeding import make_rng, stable_seed

logger = get_logger(__name__)

DEFAULT_H_GRID = np.geomspace(0.01, 0.5, 10)


@dataclass
class DiagnosticsReport:
    design: DesignDiagnostics
    margin: MarginFit
    rounds: int
    output_dir: Path

    def as_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "sparsity": self.design.sparsity,
            "support": list(self.design.support),
            "phi_min": self.design.phi_min,
            "phi_max": self.design.phi_max,
            "eigen_certified": self.design.eigen_certified,
            "compatibility": self.design.compat,
            "compatibility_certified": self.design.compat_certified,
            "margin_omega": None if self.margin.deterministic_gap else self.margin.omega,
            "deterministic_gap": self.margin.deterministic_gap,
            "notes": self.design.notes,
        }


def run_diagnostics(
    config: ExperimentConfig,
    rounds: Optional[int] = None,
    margin_samples: int = 10_000,
    cone_factor: float = 7.0,
) -> DiagnosticsReport:
    """Gram matrix of ``rounds`` uniformly chosen contexts, then SRC, compatibility and margin."""
    env = build_environment(config.env)
    rounds = config.horizon if rounds is None else rounds
    rng = make_rng(stable_seed(config.base_seed, "diagnostics"))
    rows = []
    for t in range(1, rounds + 1):
        ctx = sample_contexts(env, rng, t)
        rows.append(ctx.vectors[rng.integers(ctx.num_arms)])
    design = np.vstack(rows)
    gram = design.T @ design / rounds

    support = env.support.tolist() or [0]
    with logger.span("bandit.diagnostics", dim=env.dim):
        result = diagnose_design(gram, support, sparsity=len(support), cone_factor=cone_factor, seed=config.base_seed)
        margin = margin_exponent(env, DEFAULT_H_GRID, samples=margin_samples, seed=config.base_seed)

    output_dir = config.output_path / "diagnostics"
    output_dir.mkdir(parents=True, exist_ok=True)
    report = DiagnosticsReport(design=result, margin=margin, rounds=rounds, output_dir=output_dir)
    with open(output_dir / "diagnostics.json", "w", encoding="utf-8") as f:
        json.dump(report.as_dict(), f, indent=2)
    write_frame(margin.to_frame(), output_dir / "margin.csv")
    logger.success(
        "Diagnostics written",
        phi_min=result.phi_min,
        phi_max=result.phi_max,
        compatibility=result.compat,
        omega=margin.omega,
    )
    return report
