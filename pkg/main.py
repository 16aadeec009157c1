#!/usr/bin/env python3
"""
Sparse Bandit Lab

Command-line entry point for running sparse linear contextual bandit
experiments, ingesting datasets, and computing design diagnostics.

Exit codes: 0 success, 1 some experiment cells failed, 2 configuration error.
"""

import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from activities.plotter import emit_plot
from config.experiment import load_config
from utils.data_loader import Transform, generate_mimic, ingest_dataset
from utils.errors import BanditLabError, ConfigurationError, IngestionError
from utils.logger import get_logger
from workflows.diagnostics_workflow import run_diagnostics
from workflows.experiment_workflow import ExperimentResult, run_experiment, run_sweep

# Initialize
logger = get_logger(__name__)
console = Console()
app = typer.Typer(help="Sparse linear contextual bandit laboratory", no_args_is_help=True)

EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def _fail(exc: BanditLabError) -> None:
    console.print(f"[red]✗ {exc}[/red]")
    raise typer.Exit(code=EXIT_CONFIG)


def _timing_table(result: ExperimentResult) -> Table:
    table = Table(title=f"Timing: {result.name}", show_header=True, header_style="bold magenta")
    table.add_column("Policy", style="cyan", no_wrap=True)
    table.add_column("Mean seconds", justify="right")
    table.add_column("ms / round", justify="right")
    table.add_column("Final regret", justify="right", style="red")
    finals = {}
    if not result.summary.empty:
        finals = result.summary.groupby("policy", sort=False).tail(1).set_index("policy")["mean"].to_dict()
    for row in result.timing.itertuples(index=False):
        final = finals.get(row.policy)
        table.add_row(
            str(row.policy),
            f"{row.mean_seconds:.3f}",
            f"{row.ms_per_round:.2f}",
            "-" if final is None else f"{final:.3f}",
        )
    return table


@app.command()
def run(
    config_path: Path = typer.Argument(..., help="Experiment config (YAML)"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Override the output directory"),
    n_jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Parallel cells"),
):
    """Run every policy x replication cell of an experiment."""
    try:
        config = load_config(config_path)
        updates = {}
        if output_dir is not None:
            updates["output_dir"] = str(output_dir)
        if n_jobs is not None:
            updates["n_jobs"] = n_jobs
        if updates:
            config = config.model_copy(update=updates)
        result = run_experiment(config)
    except BanditLabError as exc:
        _fail(exc)

    console.print(_timing_table(result))
    for cell in result.failed_cells:
        console.print(f"[red]✗ {cell.policy} rep {cell.replication}: {cell.error}[/red]")
    console.print(f"Results in [cyan]{result.output_dir}[/cyan]")
    raise typer.Exit(code=result.exit_code)


@app.command()
def ingest(
    csv_path: Path = typer.Argument(..., help="Delimited text file with one row per sample"),
    label_col: str = typer.Option(..., "--label-col", help="Name of the binary label column"),
    log2: bool = typer.Option(False, "--log2", help="Apply log2(1 + x) before standardizing"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Where to save the bundle (.npz)"),
    folds: int = typer.Option(5, "--folds", help="Cross-validation folds for the penalty"),
    sparsity: Optional[int] = typer.Option(
        None, "--sparsity", help="Pick the penalty whose fit has this many nonzeros instead of cross-validating"
    ),
):
    """Parse a dataset and fit its sparse logistic reference parameter."""
    try:
        bundle = ingest_dataset(
            csv_path, label_col, Transform.LOG2 if log2 else Transform.NONE, n_folds=folds, target_sparsity=sparsity
        )
    except IngestionError as exc:
        _fail(exc)

    target = output or csv_path.with_suffix(".npz")
    bundle.save(target)
    negatives, positives = bundle.class_indices
    console.print(
        Panel.fit(
            f"rows: {bundle.n_samples}\n"
            f"features: {bundle.n_features}\n"
            f"class 0 / class 1: {len(negatives)} / {len(positives)}\n"
            f"reference sparsity: {bundle.sparsity}\n"
            f"noise scale: {bundle.noise_scale:.4f}\n"
            f"saved: {target}",
            title="Dataset bundle",
        )
    )


@app.command()
def diagnose(
    config_path: Path = typer.Argument(..., help="Experiment config (YAML)"),
    rounds: Optional[int] = typer.Option(None, "--rounds", help="Design rows to simulate (default: horizon)"),
    cone_factor: float = typer.Option(7.0, "--alpha", help="Cone factor for the compatibility number"),
):
    """Sparse eigenvalues, compatibility and margin exponent on a simulated design."""
    try:
        report = run_diagnostics(load_config(config_path), rounds=rounds, cone_factor=cone_factor)
    except BanditLabError as exc:
        _fail(exc)

    table = Table(title="Design diagnostics", show_header=True, header_style="bold magenta")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    table.add_column("Certified", justify="center")
    table.add_row("phi_min(s)", f"{report.design.phi_min:.4f}", "✅" if report.design.eigen_certified else "≈")
    table.add_row("phi_max(s)", f"{report.design.phi_max:.4f}", "✅" if report.design.eigen_certified else "≈")
    table.add_row("compatibility", f"{report.design.compat:.4f}", "✅" if report.design.compat_certified else "≈")
    omega = "inf" if report.margin.deterministic_gap else f"{report.margin.omega:.3f}"
    table.add_row("margin exponent", omega, "-")
    console.print(table)
    for note in report.design.notes:
        console.print(f"[yellow]{note}[/yellow]")


@app.command()
def plot(
    summary_path: Path = typer.Argument(..., help="summary.csv written by `run`"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="SVG path (default: next to the summary)"),
):
    """Render the cumulative-regret figure from a summary table."""
    try:
        summary = pd.read_csv(summary_path)
    except FileNotFoundError:
        _fail(ConfigurationError(f"summary not found: {summary_path}"))
    target = output or summary_path.with_name("regret.svg")
    try:
        emit_plot(summary, target)
    except BanditLabError as exc:
        _fail(exc)
    console.print(f"[green]✓ Wrote {target}[/green]")


@app.command()
def sweep(
    config_path: Path = typer.Argument(..., help="Experiment config (YAML)"),
    param: str = typer.Option(..., "--param", help="Dotted config key, e.g. env.rho or lambda_star"),
    values: Optional[str] = typer.Option(None, "--values", help="Comma-separated values"),
):
    """Run one experiment per parameter value."""
    parsed: List[str] = [v.strip() for v in values.split(",") if v.strip()] if values else []
    try:
        result = run_sweep(load_config(config_path), param, parsed)
    except BanditLabError as exc:
        _fail(exc)

    table = Table(title=f"Sweep over {param}", show_header=True, header_style="bold magenta")
    table.add_column("Value", style="cyan")
    table.add_column("Policy")
    table.add_column("Final regret", justify="right", style="red")
    table.add_column("± 95%", justify="right", style="dim")
    for row in result.table.itertuples(index=False):
        table.add_row(str(row.value), str(row.policy), f"{row.final_mean:.3f}", f"{row.final_half_width:.3f}")
    console.print(table)
    raise typer.Exit(code=result.exit_code)


@app.command()
def mimic(
    output: Path = typer.Argument(Path("data/mimic_expression.csv"), help="Where to write the CSV"),
    seed: int = typer.Option(0, "--seed"),
):
    """Write the synthetic expression table (168 x 2905, 111/57, 18-sparse signal)."""
    path = generate_mimic(output, seed=seed)
    console.print(f"[green]✓ Wrote {path}[/green]")


@app.command()
def show_config(config_path: Path = typer.Argument(..., help="Experiment config (YAML)")):
    """Validate a config and print its policy blocks."""
    try:
        config = load_config(config_path)
    except BanditLabError as exc:
        _fail(exc)

    env = config.env
    console.print(
        Panel.fit(
            f"{env.kind} env: K={env.num_arms}, d={env.dim}, s*={env.sparsity}, "
            f"{env.context}, sigma={env.noise_sigma}\n"
            f"T={config.horizon}, R={config.replications}, seed={config.base_seed}, jobs={config.n_jobs}\n"
            f"output: {config.output_path}",
            title=config.name,
        )
    )
    table = Table(title="Policies", show_header=True, header_style="bold magenta")
    table.add_column("Label", style="cyan", no_wrap=True)
    table.add_column("Policy", style="green")
    table.add_column("Settings", style="dim")
    for block in config.policies:
        fields = block.model_dump(exclude={"label", "policy"}, exclude_none=True)
        table.add_row(block.display_name, block.policy, ", ".join(f"{k}={v}" for k, v in fields.items()))
    console.print(table)


if __name__ == "__main__":
    try:
        app()
    except KeyboardInterrupt:
        console.print("\n[yellow]Stopped by user[/yellow]")
        sys.exit(EXIT_PARTIAL)
