"""Experiment orchestration: policy x replication cells, aggregation, reports."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from joblib import Parallel, delayed

from activities.episode_runner import CellResult, run_cell
from activities.plotter import emit_plot
from activities.report_writer import (
    accuracy_table,
    contraction_table,
    summarize,
    timing_table,
    write_frame,
    write_manifest,
    write_trace,
)
from config.experiment import ExperimentConfig, dump_config, parse_value, with_override
from environments.bandit_env import DatasetPairs, EnvSpec
from environments.factory import build_environment
from utils.errors import ConfigurationError
from utils.logger import get_logger

logger = get_logger(__name__)

LAMBDA_STAR_GRID = (0.2, 0.3, 0.4, 0.5)


@dataclass
class ExperimentResult:
    name: str
    output_dir: Path
    status: str
    summary: pd.DataFrame
    timing: pd.DataFrame
    cells: List[CellResult] = field(default_factory=list)
    accuracy: Optional[pd.DataFrame] = None

    @property
    def failed_cells(self) -> List[CellResult]:
        return [c for c in self.cells if not c.ok]

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "completed" else 1


class ExperimentWorkflow:
    """Runs every (policy, replication) cell and writes the result bundle.

    Cells are independent and may run in parallel; all files are written by
    the parent process after the cells return.
    """

    def __init__(self, config: ExperimentConfig, env: Optional[EnvSpec] = None):
        self.config = config
        self.env = env

    def run(self) -> ExperimentResult:
        config = self.config
        output_dir = config.output_path
        started = time.perf_counter()
        logger.info(
            "Starting experiment",
            name=config.name,
            policies=len(config.policies),
            replications=config.replications,
            horizon=config.horizon,
            n_jobs=config.n_jobs,
        )
        env = self.env if self.env is not None else build_environment(config.env)

        jobs = [
            (policy_cfg, rep)
            for policy_cfg in config.policies
            for rep in range(config.replications)
        ]
        if config.n_jobs == 1:
            cells = [run_cell(config, policy_cfg, env, rep) for policy_cfg, rep in jobs]
        else:
            cells = Parallel(n_jobs=config.n_jobs, backend="loky")(
                delayed(run_cell)(config, policy_cfg, env, rep) for policy_cfg, rep in jobs
            )

        result = self._write_outputs(env, cells, output_dir, time.perf_counter() - started)
        if result.status == "completed":
            logger.success("Experiment completed", name=config.name, output=str(output_dir))
        else:
            logger.warning(
                "Experiment finished with failures",
                name=config.name,
                failed=len(result.failed_cells),
                output=str(output_dir),
            )
        return result

    def _write_outputs(self, env: EnvSpec, cells: Sequence[CellResult], output_dir: Path, seconds: float) -> ExperimentResult:
        config = self.config
        output_dir.mkdir(parents=True, exist_ok=True)
        dump_config(config, output_dir / "config.yaml")

        traces = [c.trace for c in cells if c.trace is not None]
        for trace in traces:
            write_trace(trace, output_dir / "traces", record_micros=config.record_micros)

        summary = summarize(traces, config.labels)
        write_frame(summary, output_dir / "summary.csv")
        timing = timing_table(traces)
        write_frame(timing, output_dir / "timing.csv")

        accuracy = None
        if isinstance(env.context_dist, DatasetPairs):
            accuracy = accuracy_table(traces)
            write_frame(accuracy, output_dir / "accuracy.csv")
        if config.log_every:
            write_frame(contraction_table(traces, env.beta_star), output_dir / "contraction.csv")
        if not summary.empty:
            emit_plot(summary, output_dir / "regret.svg", title=f"Cumulative regret: {config.name}")

        cell_records = [
            {
                "policy": c.policy,
                "rep": c.replication,
                "status": c.status,
                "error": c.error,
                "seconds": c.seconds,
                "rounds": 0 if c.trace is None else int(len(c.trace.regret)),
            }
            for c in cells
        ]
        write_manifest(
            output_dir / "manifest.json",
            config.name,
            cell_records,
            extra={"total_seconds": seconds, "n_jobs": config.n_jobs},
        )
        status = "completed" if all(c.ok for c in cells) else "partial"
        return ExperimentResult(
            name=config.name,
            output_dir=output_dir,
            status=status,
            summary=summary,
            timing=timing,
            cells=list(cells),
            accuracy=accuracy,
        )


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    return ExperimentWorkflow(config).run()


@dataclass
class SweepResult:
    key: str
    output_dir: Path
    results: Dict[Any, ExperimentResult]
    table: pd.DataFrame

    @property
    def exit_code(self) -> int:
        return max((r.exit_code for r in self.results.values()), default=0)


def run_sweep(config: ExperimentConfig, key: str, values: Optional[Sequence[Any]] = None) -> SweepResult:
    """One experiment per value of ``key``; final-round regret collected in ``sweep.csv``.

    ``lambda_star`` without values uses the built-in grid 0.2 to 0.5, and
    sweeping it puts every VBTS block on the sqrt(t) schedule.
    """
    if not values:
        if key.split(".")[-1] != "lambda_star":
            raise ConfigurationError(f"no values given for sweep over {key!r}")
        values = LAMBDA_STAR_GRID
    values = [parse_value(v) if isinstance(v, str) else v for v in values]

    root = config.output_path
    env = build_environment(config.env)
    results: Dict[Any, ExperimentResult] = {}
    rows = []
    for value in values:
        variant = with_override(config, key, value)
        if key.split(".")[-1] == "lambda_star" and any(p.policy == "vbts" for p in variant.policies):
            # lambda_star only acts through the sqrt(t) schedule
            variant = with_override(variant, "lambda_mode", "practical")
        variant = variant.model_copy(
            update={"name": f"{config.name}-{key}={value}", "output_dir": str(root / f"{key}={value}")}
        )
        # Environment keys change the instance itself.
        variant_env = build_environment(variant.env) if key.startswith("env.") else env
        result = ExperimentWorkflow(variant, env=variant_env).run()
        results[value] = result
        if result.summary.empty:
            continue
        final = result.summary.groupby("policy", sort=False).tail(1)
        for row in final.itertuples(index=False):
            rows.append(
                {
                    "param": key,
                    "value": value,
                    "policy": row.policy,
                    "final_mean": row.mean,
                    "final_half_width": row.half_width,
                }
            )
    table = pd.DataFrame(rows, columns=["param", "value", "policy", "final_mean", "final_half_width"])
    write_frame(table, root / "sweep.csv")
    logger.success("Sweep completed", key=key, values=len(values), output=str(root))
    return SweepResult(key=key, output_dir=root, results=results, table=table)
