#!/usr/bin/env python3
"""
Demo Script for the Sparse Bandit Lab

Runs the quick experiment, prints the regret and timing tables, then
computes the design diagnostics for the same environment.
"""

import sys
from pathlib import Path

from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

# Add project root to path
sys.path.append(str(Path(__file__).parent.parent))

# Local imports
from config.experiment import load_config
from workflows.diagnostics_workflow import run_diagnostics
from workflows.experiment_workflow import run_experiment

console = Console()

QUICK_CONFIG = Path(__file__).parent.parent / "data" / "configs" / "quick.yaml"


def run_demo(config_path: Path = QUICK_CONFIG):
    """Run the complete demo."""

    banner = Panel.fit(
        "[bold blue]Sparse Bandit Lab - Demo[/bold blue]\n\n"
        "[dim]Config → policy x replication cells → summary, traces, SVG → diagnostics[/dim]",
        border_style="blue",
    )
    console.print(banner)

    config = load_config(config_path)
    console.print(f"\n[bold cyan]Step 1: Experiment {config.name}[/bold cyan]")
    console.print(
        f"[dim]K={config.env.num_arms}, d={config.env.dim}, s*={config.env.sparsity}, "
        f"T={config.horizon}, R={config.replications}[/dim]"
    )

    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
        task = progress.add_task("Running cells...", total=None)
        result = run_experiment(config)
        progress.update(task, description="✅ Cells finished")

    finals = result.summary.groupby("policy", sort=False).tail(1)
    table = Table(title="Cumulative regret at T", show_header=True, header_style="bold magenta")
    table.add_column("Policy", style="cyan")
    table.add_column("Mean", justify="right", style="red")
    table.add_column("± 95%", justify="right", style="dim")
    for row in finals.itertuples(index=False):
        table.add_row(str(row.policy), f"{row.mean:.3f}", f"{row.half_width:.3f}")
    console.print(table)

    console.print("\n[bold cyan]Step 2: Design diagnostics[/bold cyan]")
    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
        task = progress.add_task("Enumerating supports...", total=None)
        report = run_diagnostics(config, margin_samples=2000)
        progress.update(task, description="✅ Diagnostics written")

    omega = "inf" if report.margin.deterministic_gap else f"{report.margin.omega:.3f}"
    console.print(
        Panel(
            f"phi_min(s) = {report.design.phi_min:.4f}\n"
            f"phi_max(s) = {report.design.phi_max:.4f}\n"
            f"compatibility = {report.design.compat:.4f}\n"
            f"margin exponent = {omega}",
            title="Design",
            border_style="green",
        )
    )

    console.print(f"\n[bold green]🎉 Demo complete![/bold green] Results in [cyan]{result.output_dir}[/cyan]")
    return result


if __name__ == "__main__":
    run_demo(Path(sys.argv[1]) if len(sys.argv) > 1 else QUICK_CONFIG)
