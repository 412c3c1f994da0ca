from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParams, TooFewTurbines

__all__ = ["TurbineMeta", "TurbineSeries", "Fleet", "SplitSpec", "POWER_SLACK"]

# Measured power may exceed nameplate capacity by this factor (sensor noise).
POWER_SLACK = 1.2

_HOUR = np.timedelta64(3600, "s")


@dataclass(frozen=True)
class TurbineMeta:
    id: str
    capacity_kw: float
    age: float
    utm_x: float
    utm_y: float
    archetype: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise InvalidParams("turbine id must be a non-empty string")
        if not self.capacity_kw > 0:
            raise InvalidParams(f"{self.id}: capacity_kw must be > 0, got {self.capacity_kw}")
        if not self.age >= 0:
            raise InvalidParams(f"{self.id}: age must be >= 0, got {self.age}")

    def to_dict(self) -> dict[str, object]:
        return {
            "id": self.id,
            "capacity_kw": self.capacity_kw,
            "age": self.age,
            "utm_x": self.utm_x,
            "utm_y": self.utm_y,
            "archetype": self.archetype,
        }


@dataclass
class TurbineSeries:
    """One turbine's hourly channels plus its static metadata.

    All channels are float64 arrays of equal length; ``timestamps`` is a
    ``datetime64[s]`` array on a gap-free 1 h grid.
    """

    meta: TurbineMeta
    timestamps: np.ndarray
    power: np.ndarray
    wind_speed: np.ndarray
    wind_dir: np.ndarray
    temperature: np.ndarray

    def __post_init__(self) -> None:
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[s]")
        self.power = np.asarray(self.power, dtype=np.float64)
        self.wind_speed = np.asarray(self.wind_speed, dtype=np.float64)
        self.wind_dir = np.asarray(self.wind_dir, dtype=np.float64)
        self.temperature = np.asarray(self.temperature, dtype=np.float64)
        self.validate()

    def validate(self) -> None:
        n = len(self.timestamps)
        for name in ("power", "wind_speed", "wind_dir", "temperature"):
            if len(getattr(self, name)) != n:
                raise InvalidParams(
                    f"{self.meta.id}: channel {name} length differs from timestamps"
                )
        if n > 1 and not np.all(np.diff(self.timestamps) == _HOUR):
            raise InvalidParams(f"{self.meta.id}: timestamps must be hourly without gaps")
        if np.any(self.power < 0) or np.any(self.power > POWER_SLACK * self.meta.capacity_kw):
            raise InvalidParams(f"{self.meta.id}: power outside [0, {POWER_SLACK} x capacity]")
        if np.any(self.wind_speed < 0):
            raise InvalidParams(f"{self.meta.id}: negative wind speed")
        if np.any((self.wind_dir < 0) | (self.wind_dir >= 360)):
            raise InvalidParams(f"{self.meta.id}: wind direction outside [0, 360)")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def id(self) -> str:
        return self.meta.id

    def slice(self, start: int, stop: int) -> TurbineSeries:
        return TurbineSeries(
            meta=self.meta,
            timestamps=self.timestamps[start:stop].copy(),
            power=self.power[start:stop].copy(),
            wind_speed=self.wind_speed[start:stop].copy(),
            wind_dir=self.wind_dir[start:stop].copy(),
            temperature=self.temperature[start:stop].copy(),
        )

    def index_of(self, timestamp: np.datetime64 | str) -> int:
        ts = np.datetime64(timestamp, "s")
        hits = np.flatnonzero(self.timestamps == ts)
        if len(hits) == 0:
            raise InvalidParams(f"{self.meta.id}: timestamp {ts} not in series")
        return int(hits[0])


@dataclass
class Fleet:
    turbines: list[TurbineSeries] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.turbines:
            raise TooFewTurbines("a fleet needs at least one turbine")
        ids = [t.meta.id for t in self.turbines]
        if len(set(ids)) != len(ids):
            raise InvalidParams("turbine ids must be unique fleet-wide")

    def __len__(self) -> int:
        return len(self.turbines)

    def __iter__(self) -> Iterator[TurbineSeries]:
        return iter(self.turbines)

    def __getitem__(self, i: int) -> TurbineSeries:
        return self.turbines[i]

    @property
    def ids(self) -> list[str]:
        return [t.meta.id for t in self.turbines]

    @property
    def metas(self) -> list[TurbineMeta]:
        return [t.meta for t in self.turbines]

    @property
    def archetypes(self) -> list[str | None]:
        return [t.meta.archetype for t in self.turbines]

    def by_id(self, turbine_id: str) -> TurbineSeries:
        for t in self.turbines:
            if t.meta.id == turbine_id:
                return t
        raise KeyError(turbine_id)

    def subset(self, ids: Iterable[str]) -> Fleet:
        wanted = set(ids)
        return Fleet([t for t in self.turbines if t.meta.id in wanted])


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    boundary: int

    def __post_init__(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise InvalidParams(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.boundary < 0:
            raise InvalidParams("boundary must be a non-negative index")
