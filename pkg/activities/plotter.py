"""Cumulative-regret figure with 95% bands, rendered to deterministic SVG."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from utils.errors import InputError  # noqa: E402
from utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)

HASH_SALT = "sparse-bandit-lab"


def emit_plot(summary: pd.DataFrame, path: Path, title: str = "Cumulative regret") -> Path:
    """One mean line (gid ``mean-<policy>``) and one band (gid ``band-<policy>``) per policy."""
    if summary.empty:
        raise InputError("cannot plot an empty summary")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with plt.rc_context({"svg.hashsalt": HASH_SALT, "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for policy, group in summary.groupby("policy", sort=False):
            group = group.sort_values("t")
            (line,) = ax.plot(group["t"], group["mean"], label=str(policy), linewidth=1.5)
            line.set_gid(f"mean-{policy}")
            band = ax.fill_between(
                group["t"], group["lower"], group["upper"], color=line.get_color(), alpha=0.2, linewidth=0
            )
            band.set_gid(f"band-{policy}")
        ax.set_xlabel("round t")
        ax.set_ylabel("cumulative regret")
        ax.set_title(title)
        ax.legend(loc="upper left", frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    logger.debug("Wrote regret plot", path=str(path))
    return path
