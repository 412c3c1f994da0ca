from __future__ import annotations

"""Sliding input windows for the short-term forecaster.

Per-step input vector (F = 9), in this order:

  0 power / capacity            5 sin(2 pi hour / 24)
  1 wind_speed / wind_ref       6 cos(2 pi hour / 24)
  2 sin(direction)              7 capacity / capacity_ref
  3 cos(direction)              8 age / age_ref
  4 temperature mapped [tmin, tmax] -> [0, 1]

A window holds L consecutive input steps and the next H normalized power
values as target.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..config import NormalizationConstants
from ..data.models import TurbineSeries
from ..errors import EmptyPartition, InvalidParams, SeriesTooShort

__all__ = [
    "STEP_FEATURES",
    "N_FEATURES",
    "POWER",
    "WindowSample",
    "WindowSet",
    "ClientDataset",
    "step_features",
    "build_windows",
    "windows_for_targets",
    "make_client_dataset",
    "concat_windows",
]

STEP_FEATURES: tuple[str, ...] = (
    "power",
    "wind_speed",
    "wind_dir_sin",
    "wind_dir_cos",
    "temperature",
    "hour_sin",
    "hour_cos",
    "capacity",
    "age",
)
N_FEATURES = len(STEP_FEATURES)
POWER = 0


@dataclass(frozen=True)
class WindowSample:
    inputs: np.ndarray  # (L, F)
    target: np.ndarray  # (H,)
    start: int

    @property
    def lag_power(self) -> np.ndarray:
        return self.inputs[:, POWER]

    @property
    def met(self) -> np.ndarray:
        return self.inputs[:, 1:5]

    @property
    def temporal(self) -> np.ndarray:
        return self.inputs[:, 5:7]

    @property
    def static(self) -> np.ndarray:
        return self.inputs[0, 7:9]


@dataclass(frozen=True)
class WindowSet:
    """Array-backed sequence of windows from one turbine (or a pool of them)."""

    inputs: np.ndarray  # (n, L, F)
    targets: np.ndarray  # (n, H)
    starts: np.ndarray  # (n,) index of each window's first input step

    def __len__(self) -> int:
        return len(self.targets)

    def __getitem__(self, i: int) -> WindowSample:
        return WindowSample(self.inputs[i], self.targets[i], int(self.starts[i]))

    @property
    def lookback(self) -> int:
        return self.inputs.shape[1]

    @property
    def horizon(self) -> int:
        return self.targets.shape[1]

    def take(self, idx: np.ndarray) -> WindowSet:
        return WindowSet(self.inputs[idx], self.targets[idx], self.starts[idx])

    def target_series(self) -> np.ndarray:
        """Normalized power covered by the targets, each step once, in time order."""
        if len(self) == 0:
            return np.zeros(0)
        return np.concatenate([self.targets[:, 0], self.targets[-1, 1:]])

    @classmethod
    def empty(cls, lookback: int, horizon: int, n_features: int = N_FEATURES) -> WindowSet:
        return cls(
            np.zeros((0, lookback, n_features)), np.zeros((0, horizon)), np.zeros(0, dtype=np.int64)
        )


def concat_windows(sets: Sequence[WindowSet]) -> WindowSet:
    return WindowSet(
        np.concatenate([s.inputs for s in sets]),
        np.concatenate([s.targets for s in sets]),
        np.concatenate([s.starts for s in sets]),
    )


def step_features(series: TurbineSeries, norm: NormalizationConstants | None = None) -> np.ndarray:
    norm = norm or NormalizationConstants()
    ts = series.timestamps
    hours = (ts.astype("datetime64[h]") - ts.astype("datetime64[D]")).astype(np.int64)
    hours = hours.astype(np.float64)
    direction = np.deg2rad(series.wind_dir)
    cap = series.meta.capacity_kw
    n = len(series)
    feats = np.empty((n, N_FEATURES))
    feats[:, 0] = series.power / cap
    feats[:, 1] = series.wind_speed / norm.wind_speed_ref
    feats[:, 2] = np.sin(direction)
    feats[:, 3] = np.cos(direction)
    feats[:, 4] = (series.temperature - norm.temp_min) / (norm.temp_max - norm.temp_min)
    feats[:, 5] = np.sin(2 * np.pi * hours / 24.0)
    feats[:, 6] = np.cos(2 * np.pi * hours / 24.0)
    feats[:, 7] = cap / norm.capacity_ref
    feats[:, 8] = series.meta.age / norm.age_ref
    return feats


def windows_for_targets(
    feats: np.ndarray, first_target: int, stop: int, lookback: int, horizon: int
) -> WindowSet:
    """Windows whose H target steps all lie in ``[first_target, stop)``."""
    lo = max(first_target, lookback)
    hi = stop - horizon  # last admissible first-target index
    if hi < lo:
        return WindowSet.empty(lookback, horizon, feats.shape[1])
    targets_at = np.arange(lo, hi + 1)
    starts = targets_at - lookback
    view = np.lib.stride_tricks.sliding_window_view(feats, lookback, axis=0)  # (n-L+1, F, L)
    inputs = np.ascontiguousarray(view[starts].transpose(0, 2, 1))
    power = feats[:, POWER]
    targets = np.stack([power[t : t + horizon] for t in targets_at])
    return WindowSet(inputs, targets, starts.astype(np.int64))


def build_windows(
    series: TurbineSeries,
    lookback: int = 24,
    horizon: int = 3,
    norm: NormalizationConstants | None = None,
) -> WindowSet:
    """All stride-1 windows of a series: ``len - L - H + 1`` of them."""
    if lookback < 1 or horizon < 1:
        raise InvalidParams("lookback and horizon must be >= 1")
    if len(series) < lookback + horizon:
        raise SeriesTooShort(
            f"{series.id}: {len(series)} steps < lookback {lookback} + horizon {horizon}"
        )
    return windows_for_targets(step_features(series, norm), 0, len(series), lookback, horizon)


@dataclass(frozen=True)
class ClientDataset:
    turbine_id: str
    capacity_kw: float
    train: WindowSet
    validation: WindowSet
    test: WindowSet

    @property
    def n_samples(self) -> int:
        return len(self.train)


def make_client_dataset(
    series: TurbineSeries,
    *,
    lookback: int = 24,
    horizon: int = 3,
    train_fraction: float = 0.8,
    val_fraction: float = 0.1,
    norm: NormalizationConstants | None = None,
) -> ClientDataset:
    """Chronological train / validation / test windows for one turbine.

    The test part starts at ``floor(train_fraction * len)``; validation is the
    last ``floor(val_fraction * len)`` steps before it. A window belongs to the
    part holding all of its target steps; its inputs may reach back into the
    previous part.
    """
    n = len(series)
    if not 0 < train_fraction < 1 or not 0 <= val_fraction < train_fraction:
        raise InvalidParams("need 0 <= val_fraction < train_fraction < 1")
    test_at = math.floor(train_fraction * n)
    val_at = test_at - math.floor(val_fraction * n)
    feats = step_features(series, norm)
    train = windows_for_targets(feats, 0, val_at, lookback, horizon)
    validation = windows_for_targets(feats, val_at, test_at, lookback, horizon)
    test = windows_for_targets(feats, test_at, n, lookback, horizon)
    if len(train) == 0 or len(test) == 0:
        raise EmptyPartition(
            f"{series.id}: {n} steps leave no train or test window (L={lookback}, H={horizon})"
        )
    return ClientDataset(series.id, series.meta.capacity_kw, train, validation, test)
