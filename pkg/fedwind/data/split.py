from __future__ import annotations

from ..errors import EmptyPartition, InvalidParams
from .models import SplitSpec, TurbineSeries

__all__ = ["split_spec", "chronological_split"]


def split_spec(length: int, train_fraction: float) -> SplitSpec:
    if not 0 < train_fraction < 1:
        raise InvalidParams(f"train_fraction must be in (0, 1), got {train_fraction}")
    return SplitSpec(train_fraction=train_fraction, boundary=int(train_fraction * length))


def chronological_split(
    series: TurbineSeries,
    train_fraction: float,
    lookback: int | None = None,
    horizon: int = 3,
) -> tuple[TurbineSeries, TurbineSeries]:
    """Split at ``floor(fraction * length)``; the train part precedes the test part.

    With ``lookback`` given, both parts must hold at least ``lookback + horizon``
    steps (one full window each); otherwise they only need to be non-empty.
    """
    spec = split_spec(len(series), train_fraction)
    b = spec.boundary
    minimum = 1 if lookback is None else lookback + horizon
    if b < minimum or len(series) - b < minimum:
        raise EmptyPartition(
            f"{series.id}: split {b}/{len(series) - b} leaves a side below {minimum} steps"
        )
    return series.slice(0, b), series.slice(b, len(series))
