from __future__ import annotations

"""Comparison tables and SVG plots for a finished run.

Layout under ``out_dir``::

    comparison.csv               method,n_groups,split,mse,rmse,mae,r2
    comparison_per_turbine.csv   method,id,group,split,mse,rmse,mae,r2
    <method>/profile.csv
    <method>/pca.csv
    <method>/plots/forecast_<id>.svg
    <method>/plots/history_cluster_<id>.svg

CSV output is byte-stable for equal inputs. SVGs are written with a fixed
hash salt and no date so they are stable too.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from ..errors import ReportIOError  # noqa: E402
from ..utils.io import write_frame  # noqa: E402
from .grouping import GroupingResult  # noqa: E402
from .metrics import MetricsReport  # noqa: E402

log = logging.getLogger(__name__)

__all__ = [
    "COMPARISON_COLUMNS",
    "PER_TURBINE_COLUMNS",
    "MethodSummary",
    "comparison_frame",
    "emit_report",
]

COMPARISON_COLUMNS = ["method", "n_groups", "split", "mse", "rmse", "mae", "r2"]
PER_TURBINE_COLUMNS = ["method", "id", "group", "split", "mse", "rmse", "mae", "r2"]
_SPLITS = ("train", "test")

plt.rcParams["svg.hashsalt"] = "fedwind"


@dataclass
class MethodSummary:
    """Everything the report needs about one grouping method."""

    method: str
    grouping: GroupingResult
    pooled: dict[str, MetricsReport] = field(default_factory=dict)
    per_turbine: pd.DataFrame | None = None  # id,group,split,mse,rmse,mae,r2
    profile: pd.DataFrame | None = None
    pca: pd.DataFrame | None = None
    histories: dict[int, pd.DataFrame] = field(default_factory=dict)
    forecasts: pd.DataFrame | None = None  # id,timestamp,measured_kw,predicted_kw,mode


def comparison_frame(summaries: Sequence[MethodSummary]) -> pd.DataFrame:
    records = []
    for s in summaries:
        for split in _SPLITS:
            m = s.pooled.get(split)
            if m is None:
                continue
            records.append(
                {
                    "method": s.method,
                    "n_groups": s.grouping.k,
                    "split": split,
                    "mse": m.mse,
                    "rmse": m.rmse,
                    "mae": m.mae,
                    "r2": m.r2,
                }
            )
    return pd.DataFrame(records, columns=COMPARISON_COLUMNS)


def _per_turbine_frame(summaries: Sequence[MethodSummary]) -> pd.DataFrame:
    parts = []
    for s in summaries:
        if s.per_turbine is None or s.per_turbine.empty:
            continue
        part = s.per_turbine.copy()
        part.insert(0, "method", s.method)
        parts.append(part[PER_TURBINE_COLUMNS])
    if not parts:
        return pd.DataFrame(columns=PER_TURBINE_COLUMNS)
    return pd.concat(parts, ignore_index=True)


def _save(fig: plt.Figure, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise ReportIOError(f"cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    return path


def _plot_forecast(frame: pd.DataFrame, turbine_id: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 3.5))
    hours = range(len(frame))
    ax.plot(hours, frame["measured_kw"].to_numpy(), label="measured", color="black")
    ax.plot(hours, frame["predicted_kw"].to_numpy(), label="predicted", linestyle="--")
    ax.set_title(f"{turbine_id} ({frame['mode'].iloc[0]}) from {frame['timestamp'].iloc[0]}")
    ax.set_xlabel("hour")
    ax.set_ylabel("power [kW]")
    ax.legend(loc="upper right")
    fig.tight_layout()
    return _save(fig, path)


def _plot_history(frame: pd.DataFrame, cluster: int, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for split, part in frame.groupby("split", sort=True):
        ax.plot(part["round"].to_numpy(), part["mse"].to_numpy(), marker="o", label=str(split))
    ax.set_title(f"cluster {cluster}")
    ax.set_xlabel("round")
    ax.set_ylabel("MSE (normalized)")
    ax.legend(loc="upper right")
    fig.tight_layout()
    return _save(fig, path)


def emit_report(
    summaries: Sequence[MethodSummary], out_dir: str | Path, *, plots: bool = True
) -> list[Path]:
    """Write comparison tables, per-method tables and plots; return the paths written.

    Methods without forecasts get tables only.
    """
    out = Path(out_dir)
    written = [
        write_frame(out / "comparison.csv", comparison_frame(summaries)),
        write_frame(out / "comparison_per_turbine.csv", _per_turbine_frame(summaries)),
    ]
    for s in summaries:
        mdir = out / s.method
        if s.profile is not None:
            written.append(write_frame(mdir / "profile.csv", s.profile))
        if s.pca is not None:
            written.append(write_frame(mdir / "pca.csv", s.pca))
        if not plots or s.forecasts is None or s.forecasts.empty:
            continue
        for turbine_id, part in s.forecasts.groupby("id", sort=True):
            target = mdir / "plots" / f"forecast_{turbine_id}.svg"
            written.append(_plot_forecast(part, str(turbine_id), target))
        for cluster in sorted(s.histories):
            hist = s.histories[cluster]
            if hist.empty:
                continue
            target = mdir / "plots" / f"history_cluster_{cluster}.svg"
            written.append(_plot_history(hist, cluster, target))
    log.info("Report written to %s (%d files)", out, len(written))
    return written
