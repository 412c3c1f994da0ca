from __future__ import annotations

"""Regression metrics on normalized power.

R^2 is undefined when the true series has zero variance. We return 1.0 when
the prediction is exact and otherwise the sentinel :data:`R2_FLOOR` with
``degenerate=True`` so near-constant clusters show up in reports instead of
silently producing inf.
"""

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from ..errors import EmptyInput, LengthMismatch

__all__ = ["R2_FLOOR", "MetricsReport", "regression_metrics"]

R2_FLOOR = -1e18


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    rmse: float
    mae: float
    r2: float
    n_points: int
    degenerate: bool = False

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def regression_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> MetricsReport:
    yt = np.asarray(y_true, dtype=np.float64).ravel()
    yp = np.asarray(y_pred, dtype=np.float64).ravel()
    if len(yt) != len(yp):
        raise LengthMismatch(f"y_true has {len(yt)} points, y_pred {len(yp)}")
    if len(yt) == 0:
        raise EmptyInput("regression_metrics needs at least one point")

    err = yp - yt
    sse = float(np.dot(err, err))
    mse = sse / len(yt)
    mae = float(np.abs(err).mean())
    centred = yt - yt.mean()
    sst = float(np.dot(centred, centred))

    degenerate = False
    if sst > 0:
        r2 = 1.0 - sse / sst
    elif sse == 0:
        r2 = 1.0
    else:
        r2, degenerate = R2_FLOOR, True
    return MetricsReport(
        mse=mse, rmse=float(np.sqrt(mse)), mae=mae, r2=r2, n_points=len(yt), degenerate=degenerate
    )
