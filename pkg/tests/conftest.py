from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from fedwind.data import Fleet, TurbineMeta, TurbineSeries, generate_synthetic_fleet

SeriesFactory = Callable[..., TurbineSeries]


@pytest.fixture
def make_series() -> SeriesFactory:
    """Hourly series from a power array; other channels are mild constants."""

    def _make(
        tid: str,
        power: np.ndarray | list[float],
        *,
        capacity: float = 2000.0,
        age: float = 5.0,
        x: float = 0.0,
        y: float = 0.0,
        start: str = "2023-01-01T00:00:00",
        wind: np.ndarray | None = None,
    ) -> TurbineSeries:
        p = np.asarray(power, dtype=np.float64)
        n = len(p)
        ts = np.datetime64(start, "s") + np.arange(n) * np.timedelta64(3600, "s")
        return TurbineSeries(
            meta=TurbineMeta(id=tid, capacity_kw=capacity, age=age, utm_x=x, utm_y=y),
            timestamps=ts,
            power=p,
            wind_speed=np.full(n, 7.0) if wind is None else np.asarray(wind, dtype=np.float64),
            wind_dir=np.full(n, 180.0),
            temperature=np.full(n, 10.0),
        )

    return _make


@pytest.fixture(scope="session")
def small_fleet() -> Fleet:
    archetypes = [("faulty", 4, None), ("baseline_stable", 6, None), ("high_variability", 6, None)]
    return generate_synthetic_fleet(archetypes, 240, 11)
