from __future__ import annotations

"""Per-turbine behaviour fingerprints.

Six long-term statistics of the power series: level (mean), variability
(std, cv), availability (zero_ratio) and short-term dynamics (mean and std of
first differences). Variances are population variances (divide by n).
"""

from dataclasses import astuple, dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..data.models import TurbineSeries
from ..errors import MissingFile, SchemaViolation, SeriesTooShort
from ..utils.io import write_frame

__all__ = [
    "FEATURES",
    "CV_EPSILON",
    "CV_CAP",
    "BehaviourFingerprint",
    "fingerprint",
    "fingerprint_values",
    "write_fingerprints",
    "read_fingerprints",
]

FEATURES: tuple[str, ...] = ("mean_power", "std_power", "cv", "zero_ratio", "ramp_mean", "ramp_std")
ZERO_RATIO = FEATURES.index("zero_ratio")

# mean-guard for cv: "near zero" is relative to the turbine's capacity
CV_EPSILON = 1e-6
CV_CAP = 1e6


@dataclass(frozen=True)
class BehaviourFingerprint:
    mean_power: float
    std_power: float
    cv: float
    zero_ratio: float
    ramp_mean: float
    ramp_std: float

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, values: np.ndarray) -> BehaviourFingerprint:
        return cls(*(float(v) for v in values))


def fingerprint_values(power: np.ndarray, capacity_kw: float) -> BehaviourFingerprint:
    p = np.asarray(power, dtype=np.float64)
    if len(p) < 2:
        raise SeriesTooShort(f"fingerprint needs >= 2 steps, got {len(p)}")
    mean = float(p.mean())
    std = float(p.std())
    floor = CV_EPSILON * capacity_kw
    if mean > floor:
        cv = std / mean
    elif std == 0.0:
        cv = 0.0
    else:
        cv = min(std / floor, CV_CAP)
    ramps = np.diff(p)
    return BehaviourFingerprint(
        mean_power=mean,
        std_power=std,
        cv=cv,
        zero_ratio=float(np.count_nonzero(p == 0.0)) / len(p),
        ramp_mean=float(ramps.mean()),
        ramp_std=float(ramps.std()),
    )


def fingerprint(series: TurbineSeries) -> BehaviourFingerprint:
    return fingerprint_values(series.power, series.meta.capacity_kw)


def write_fingerprints(path: str | Path, ids: list[str], fps: list[BehaviourFingerprint]) -> Path:
    frame = pd.DataFrame([f.to_array() for f in fps], columns=list(FEATURES))
    frame.insert(0, "id", ids)
    return write_frame(path, frame)


def read_fingerprints(path: str | Path) -> tuple[list[str], list[BehaviourFingerprint]]:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(p)
    frame = pd.read_csv(
        p, dtype={"id": str}, keep_default_na=False, float_precision="round_trip"
    )
    missing = [c for c in ("id", *FEATURES) if c not in frame.columns]
    if missing:
        raise SchemaViolation(f"{p.name}: missing columns {missing}", row=1)
    values = frame[list(FEATURES)].to_numpy(dtype=np.float64)
    return frame["id"].tolist(), [BehaviourFingerprint.from_array(v) for v in values]
