"""Write traces, summaries and the run manifest."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from diagnostics.contraction import contraction_trace
from policies.episode import TRACE_COLUMNS, RegretTrace
from utils.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"
BAND_Z = 1.96
SUMMARY_COLUMNS = ["policy", "t", "mean", "sd", "half_width", "lower", "upper", "replications"]


def trace_filename(policy: str, replication: int) -> str:
    return f"{policy}_rep{replication:03d}.csv"


def write_trace(trace: RegretTrace, directory: Path, record_micros: bool = False) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / trace_filename(trace.policy, trace.replication)
    trace.to_frame(record_micros=record_micros).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_traces(directory: Path) -> pd.DataFrame:
    """Concatenate every trace CSV under ``directory``."""
    frames = [pd.read_csv(path, keep_default_na=False) for path in sorted(Path(directory).glob("*.csv"))]
    if not frames:
        return pd.DataFrame(columns=TRACE_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def summarize(traces: Iterable[RegretTrace], labels: Optional[List[str]] = None) -> pd.DataFrame:
    """Mean cumulative regret per policy and round with a normal 95% band.

    Only completed episodes enter the summary; sd uses ddof=1 and is 0 for
    a single replication.
    """
    by_policy: Dict[str, List[np.ndarray]] = {}
    for trace in traces:
        if trace.completed:
            by_policy.setdefault(trace.policy, []).append(trace.cum_regret)
    order = labels if labels is not None else sorted(by_policy)

    frames = []
    for policy in order:
        curves = by_policy.get(policy)
        if not curves:
            continue
        stacked = np.vstack(curves)
        count = stacked.shape[0]
        mean = stacked.mean(axis=0)
        sd = stacked.std(axis=0, ddof=1) if count > 1 else np.zeros_like(mean)
        half_width = BAND_Z * sd / np.sqrt(count)
        frames.append(
            pd.DataFrame(
                {
                    "policy": policy,
                    "t": np.arange(1, stacked.shape[1] + 1),
                    "mean": mean,
                    "sd": sd,
                    "half_width": half_width,
                    "lower": mean - half_width,
                    "upper": mean + half_width,
                    "replications": count,
                },
                columns=SUMMARY_COLUMNS,
            )
        )
    if not frames:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def timing_table(traces: Iterable[RegretTrace]) -> pd.DataFrame:
    """Mean wall-clock seconds per episode and per round, by policy."""
    rows = [
        {"policy": t.policy, "seconds": t.total_seconds, "rounds": len(t.regret)}
        for t in traces
        if len(t.regret) > 0
    ]
    if not rows:
        return pd.DataFrame(columns=["policy", "mean_seconds", "ms_per_round", "replications"])
    frame = pd.DataFrame(rows)
    grouped = frame.groupby("policy", sort=False)
    table = pd.DataFrame(
        {
            "mean_seconds": grouped["seconds"].mean(),
            "ms_per_round": 1e3 * grouped["seconds"].sum() / grouped["rounds"].sum(),
            "replications": grouped.size(),
        }
    )
    return table.reset_index()


def accuracy_table(traces: Iterable[RegretTrace]) -> pd.DataFrame:
    rows = [
        {"policy": t.policy, "rep": t.replication, "accuracy": t.accuracy}
        for t in traces
        if t.accuracy is not None
    ]
    return pd.DataFrame(rows, columns=["policy", "rep", "accuracy"])


def contraction_table(traces: Iterable[RegretTrace], beta_star: np.ndarray) -> pd.DataFrame:
    frames = []
    for trace in traces:
        if not trace.posterior_means:
            continue
        result = contraction_trace(trace, beta_star)
        frame = result.to_frame()
        frame.insert(0, "rep", trace.replication)
        frame.insert(0, "policy", trace.policy)
        frame["slope"] = result.slope
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["policy", "rep", "t", "l1_error", "rate", "slope"])
    return pd.concat(frames, ignore_index=True)


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_manifest(path: Path, name: str, cells: List[dict], extra: Optional[dict] = None) -> Path:
    """Run metadata; the only output that carries timestamps."""
    manifest = {
        "name": name,
        "written_at": datetime.now(timezone.utc).isoformat(),
        "status": "completed" if all(c["status"] == "completed" for c in cells) else "partial",
        "failed_cells": sum(1 for c in cells if c["status"] != "completed"),
        "cells": cells,
    }
    if extra:
        manifest.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, default=str)
    logger.debug("Wrote manifest", path=str(path), cells=len(cells))
    return path
