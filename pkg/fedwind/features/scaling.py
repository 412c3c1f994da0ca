from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import DimensionMismatch, TooFewTurbines
from .fingerprint import FEATURES, ZERO_RATIO, BehaviourFingerprint

log = logging.getLogger(__name__)

__all__ = ["Scaler", "FeatureMatrix", "standardise"]


@dataclass
class Scaler:
    """Column-wise z-transform. Degenerate columns map to 0; passthrough columns stay raw."""

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray
    passthrough: np.ndarray
    columns: tuple[str, ...] = FEATURES

    def _scaled(self) -> np.ndarray:
        return ~(self.degenerate | self.passthrough)

    def transform(self, values: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(values, dtype=np.float64))
        if x.shape[1] != len(self.mean):
            raise DimensionMismatch(f"expected {len(self.mean)} columns, got {x.shape[1]}")
        out = np.zeros_like(x)
        s = self._scaled()
        out[:, s] = (x[:, s] - self.mean[s]) / self.std[s]
        out[:, self.passthrough] = x[:, self.passthrough]
        return out

    def inverse_transform(self, rows: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if z.shape[1] != len(self.mean):
            raise DimensionMismatch(f"expected {len(self.mean)} columns, got {z.shape[1]}")
        out = np.empty_like(z)
        s = self._scaled()
        out[:, s] = z[:, s] * self.std[s] + self.mean[s]
        out[:, self.degenerate] = self.mean[self.degenerate]
        out[:, self.passthrough] = z[:, self.passthrough]
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "columns": list(self.columns),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "degenerate": self.degenerate.tolist(),
            "passthrough": self.passthrough.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Scaler:
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            std=np.asarray(data["std"], dtype=np.float64),
            degenerate=np.asarray(data["degenerate"], dtype=bool),
            passthrough=np.asarray(data["passthrough"], dtype=bool),
            columns=tuple(data.get("columns", FEATURES)),
        )


@dataclass
class FeatureMatrix:
    rows: np.ndarray
    scaler: Scaler
    ids: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if not self.ids:
            self.ids = [str(i) for i in range(len(self.rows))]
        if len(self.ids) != len(self.rows):
            raise DimensionMismatch("one id per row is required")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def subset(self, indices: Sequence[int] | np.ndarray) -> FeatureMatrix:
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(self.rows[idx], self.scaler, [self.ids[i] for i in idx])


def _is_degenerate(mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    # identical floats may still leave a rounding-sized std
    return std <= 1e-12 * np.maximum(1.0, np.abs(mean))


def standardise(
    fingerprints: Sequence[BehaviourFingerprint] | np.ndarray,
    *,
    ids: Sequence[str] | None = None,
    standardise_zero_ratio: bool = True,
) -> FeatureMatrix:
    """Population z-score per column across the fleet.

    With ``standardise_zero_ratio=False`` the zero_ratio column is kept raw,
    the layout used for reporting.
    """
    if isinstance(fingerprints, np.ndarray):
        raw = np.asarray(fingerprints, dtype=np.float64)
    else:
        raw = np.array([f.to_array() for f in fingerprints], dtype=np.float64)
        raw = raw.reshape(-1, len(FEATURES))
    if raw.shape[0] < 2:
        raise TooFewTurbines(f"standardisation needs >= 2 turbines, got {raw.shape[0]}")

    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    degenerate = _is_degenerate(mean, std)
    passthrough = np.zeros(raw.shape[1], dtype=bool)
    if not standardise_zero_ratio:
        passthrough[ZERO_RATIO] = True
    degenerate &= ~passthrough
    scaler = Scaler(mean=mean, std=std, degenerate=degenerate, passthrough=passthrough)
    if degenerate.any():
        log.info(
            "Degenerate feature columns mapped to zero: %s",
            [c for c, flag in zip(FEATURES, degenerate, strict=True) if flag],
        )
    return FeatureMatrix(scaler.transform(raw), scaler, list(ids) if ids is not None else [])
