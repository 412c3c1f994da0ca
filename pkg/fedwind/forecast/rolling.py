from __future__ import annotations

"""24 hour trajectories from the H-step predictor.

The predictor is invoked every H steps from ``start``. In ``teacher_forced``
mode each block sees measured power lags; in ``recursive`` mode the power
channel from ``start`` onward is overwritten with the model's own
predictions (meteorology and calendar inputs stay measured). The output is
denormalized and clipped to ``[0, capacity]``.

Both modes need ``start + horizon <= len(series)``: every block reads measured
meteorology and calendar rows, and the trajectory carries the measured power
it is scored against.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..config import NormalizationConstants, RollingMode
from ..data.models import POWER_SLACK, TurbineSeries
from ..errors import InsufficientHistory, InvalidParams
from .model import Predictor
from .windows import POWER, step_features

log = logging.getLogger(__name__)

__all__ = ["ForecastTrajectory", "rolling_forecast", "trajectories_frame"]

_COLUMNS = ["id", "timestamp", "measured_kw", "predicted_kw", "mode"]


@dataclass(frozen=True)
class ForecastTrajectory:
    turbine_id: str
    timestamps: np.ndarray
    measured_kw: np.ndarray
    predicted_kw: np.ndarray
    mode: str
    invocations: int
    start_index: int

    def __len__(self) -> int:
        return len(self.predicted_kw)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "id": self.turbine_id,
                "timestamp": np.datetime_as_string(self.timestamps, unit="s"),
                "measured_kw": self.measured_kw,
                "predicted_kw": self.predicted_kw,
                "mode": self.mode,
            },
            columns=_COLUMNS,
        )


def trajectories_frame(trajectories: list[ForecastTrajectory]) -> pd.DataFrame:
    if not trajectories:
        return pd.DataFrame(columns=_COLUMNS)
    return pd.concat([t.to_frame() for t in trajectories], ignore_index=True)


def rolling_forecast(
    model: Predictor,
    series: TurbineSeries,
    start: int | str | np.datetime64,
    horizon: int = 24,
    mode: RollingMode = "teacher_forced",
    *,
    lookback: int = 24,
    norm: NormalizationConstants | None = None,
) -> ForecastTrajectory:
    if mode not in ("teacher_forced", "recursive"):
        raise InvalidParams(f"unknown rolling mode {mode!r}")
    if horizon < 1:
        raise InvalidParams("horizon must be >= 1")
    n = len(series)
    s = start if isinstance(start, int | np.integer) else series.index_of(start)
    s = int(s)
    if s < lookback:
        raise InsufficientHistory(
            f"{series.id}: start {s} leaves fewer than {lookback} steps of history"
        )
    if s + horizon > n:
        raise InsufficientHistory(
            f"{series.id}: start {s} + horizon {horizon} runs past the series end ({n})"
        )

    work = step_features(series, norm)
    chunks: list[np.ndarray] = []
    covered = 0
    invocations = 0
    while covered < horizon:
        t = s + covered
        pred = np.asarray(model.predict(work[None, t - lookback : t]), dtype=np.float64)[0]
        if pred.ndim != 1 or len(pred) == 0:
            raise InvalidParams(f"predictor returned shape {pred.shape}, expected (H,)")
        invocations += 1
        chunks.append(pred)
        if mode == "recursive":
            stop = min(t + len(pred), n)
            work[t:stop, POWER] = np.clip(pred[: stop - t], 0.0, POWER_SLACK)
        covered += len(pred)

    cap = series.meta.capacity_kw
    normalized = np.concatenate(chunks)[:horizon]
    log.debug(
        "%s: %s forecast from step %d, %d invocations", series.id, mode, s, invocations
    )
    return ForecastTrajectory(
        turbine_id=series.id,
        timestamps=series.timestamps[s : s + horizon].copy(),
        measured_kw=series.power[s : s + horizon].copy(),
        predicted_kw=np.clip(normalized * cap, 0.0, cap),
        mode=mode,
        invocations=invocations,
        start_index=s,
    )
