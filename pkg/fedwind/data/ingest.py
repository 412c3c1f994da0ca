from __future__ import annotations

"""CSV ingestion and emission for turbine fleets.

``meta.csv``   header ``id,capacity_kw,age,utm_x,utm_y`` (optional ``archetype``)
``series.csv`` header ``id,timestamp,power_kw,wind_speed,wind_dir_deg,temp_c``

Row numbers in :class:`SchemaViolation` are 1-based file lines (header = 1).
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import MissingFile, NonUniformTimestamps, SchemaViolation
from ..utils.io import write_frame
from .models import POWER_SLACK, Fleet, TurbineMeta, TurbineSeries

log = logging.getLogger(__name__)

META_COLUMNS = ("id", "capacity_kw", "age", "utm_x", "utm_y")
SERIES_COLUMNS = ("id", "timestamp", "power_kw", "wind_speed", "wind_dir_deg", "temp_c")

__all__ = ["META_COLUMNS", "SERIES_COLUMNS", "load_meta", "load_fleet", "save_fleet"]


def _read(path: str | Path, required: tuple[str, ...]) -> pd.DataFrame:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(p)
    frame = pd.read_csv(p, dtype=str, keep_default_na=False, encoding="utf-8")
    frame.columns = [str(c).strip() for c in frame.columns]
    for col in required:
        if col not in frame.columns:
            raise SchemaViolation(f"{p.name}: missing column", row=1, column=col)
    return frame


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return float("nan")


def _numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    # float() parses the shortest repr back to the same double; the pandas
    # fast parser can land one ulp off and trip the capacity bound
    values = np.fromiter(
        (_parse_float(v) for v in frame[column].str.strip()), dtype=np.float64, count=len(frame)
    )
    bad = np.isnan(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise SchemaViolation(
            f"unparseable value {frame[column].iloc[i]!r}", row=i + 2, column=column
        )
    return values


def _first_bad(mask: np.ndarray) -> int | None:
    hits = np.flatnonzero(mask)
    return int(hits[0]) + 2 if len(hits) else None


def _load_meta(meta_path: str | Path) -> tuple[list[TurbineMeta], dict[str, int]]:
    frame = _read(meta_path, META_COLUMNS)
    ids = frame["id"].str.strip().to_numpy()
    empty = _first_bad(ids == "")
    if empty is not None:
        raise SchemaViolation("empty turbine id", row=empty, column="id")

    cols = {c: _numeric(frame, c) for c in META_COLUMNS[1:]}
    for column, mask, what in (
        ("capacity_kw", ~(cols["capacity_kw"] > 0), "capacity_kw must be > 0"),
        ("age", ~(cols["age"] >= 0), "age must be >= 0"),
        ("utm_x", ~np.isfinite(cols["utm_x"]), "non-finite coordinate"),
        ("utm_y", ~np.isfinite(cols["utm_y"]), "non-finite coordinate"),
    ):
        row = _first_bad(mask)
        if row is not None:
            raise SchemaViolation(what, row=row, column=column)

    archetypes = frame["archetype"].str.strip() if "archetype" in frame.columns else None
    metas: list[TurbineMeta] = []
    line_of: dict[str, int] = {}
    for i, tid in enumerate(ids):
        if tid in line_of:
            raise SchemaViolation(f"duplicate turbine id {tid!r}", row=i + 2, column="id")
        line_of[tid] = i + 2
        arch = archetypes.iloc[i] if archetypes is not None else ""
        metas.append(
            TurbineMeta(
                id=tid,
                capacity_kw=float(cols["capacity_kw"][i]),
                age=float(cols["age"][i]),
                utm_x=float(cols["utm_x"][i]),
                utm_y=float(cols["utm_y"][i]),
                archetype=arch or None,
            )
        )
    return metas, line_of


def load_meta(meta_path: str | Path) -> list[TurbineMeta]:
    """Validated turbine metadata only, in file order."""
    return _load_meta(meta_path)[0]


def load_fleet(series_path: str | Path, meta_path: str | Path) -> Fleet:
    """Parse, validate and align a fleet from its CSV pair."""
    metas, meta_line = _load_meta(meta_path)
    by_id = {m.id: m for m in metas}

    frame = _read(series_path, SERIES_COLUMNS)
    ids = frame["id"].str.strip().to_numpy()
    for i, tid in enumerate(ids):
        if tid not in by_id:
            raise SchemaViolation(f"unknown turbine id {tid!r}", row=i + 2, column="id")

    stamps = pd.to_datetime(
        frame["timestamp"].str.strip(), errors="coerce", format="ISO8601", utc=True
    )
    row = _first_bad(stamps.isna().to_numpy())
    if row is not None:
        raise SchemaViolation("unparseable timestamp", row=row, column="timestamp")
    ts = stamps.dt.tz_localize(None).to_numpy().astype("datetime64[s]")

    power = _numeric(frame, "power_kw")
    wind = _numeric(frame, "wind_speed")
    wdir = _numeric(frame, "wind_dir_deg")
    temp = _numeric(frame, "temp_c")
    cap = np.array([by_id[t].capacity_kw for t in ids], dtype=np.float64)
    for column, mask, what in (
        ("power_kw", power < 0, "negative power"),
        ("power_kw", power > POWER_SLACK * cap, f"power above {POWER_SLACK} x capacity"),
        ("wind_speed", wind < 0, "negative wind speed"),
        ("wind_dir_deg", (wdir < 0) | (wdir >= 360), "direction outside [0, 360)"),
        ("temp_c", ~np.isfinite(temp), "non-finite temperature"),
    ):
        row = _first_bad(mask)
        if row is not None:
            raise SchemaViolation(what, row=row, column=column)

    hour = np.timedelta64(3600, "s")
    per_turbine: dict[str, np.ndarray] = {}
    for tid in by_id:
        rows = np.flatnonzero(ids == tid)
        if len(rows) == 0:
            raise SchemaViolation(
                f"turbine {tid!r} has no series rows", row=meta_line[tid], column="id"
            )
        rows = rows[np.argsort(ts[rows], kind="stable")]
        steps = np.diff(ts[rows])
        if np.any(steps != hour):
            bad = int(np.flatnonzero(steps != hour)[0])
            detail = f"step {steps[bad]} after {ts[rows][bad]}"
            raise NonUniformTimestamps(tid, detail)
        per_turbine[tid] = rows

    start = max(ts[r[0]] for r in per_turbine.values())
    end = min(ts[r[-1]] for r in per_turbine.values())
    if start > end:
        raise SchemaViolation("turbines share no common time range", column="timestamp")

    turbines: list[TurbineSeries] = []
    for meta in metas:
        rows = per_turbine[meta.id]
        rows = rows[(ts[rows] >= start) & (ts[rows] <= end)]
        turbines.append(
            TurbineSeries(
                meta=meta,
                timestamps=ts[rows],
                power=power[rows],
                wind_speed=wind[rows],
                wind_dir=wdir[rows],
                temperature=temp[rows],
            )
        )
    fleet = Fleet(turbines)
    log.info(
        "Loaded fleet of %d turbines x %d steps from %s", len(fleet), len(fleet[0]), series_path
    )
    return fleet


def save_fleet(fleet: Fleet, series_path: str | Path, meta_path: str | Path) -> None:
    """Write a fleet as the CSV pair :func:`load_fleet` reads back unchanged."""
    meta_rows = [m.to_dict() for m in fleet.metas]
    meta = pd.DataFrame(meta_rows, columns=[*META_COLUMNS, "archetype"])
    if meta["archetype"].isna().all():
        meta = meta.drop(columns=["archetype"])
    else:
        meta["archetype"] = meta["archetype"].fillna("")
    write_frame(meta_path, meta)

    parts = [
        pd.DataFrame(
            {
                "id": t.meta.id,
                "timestamp": np.datetime_as_string(t.timestamps, unit="s"),
                "power_kw": t.power,
                "wind_speed": t.wind_speed,
                "wind_dir_deg": t.wind_dir,
                "temp_c": t.temperature,
            }
        )
        for t in fleet
    ]
    write_frame(series_path, pd.concat(parts, ignore_index=True))
    log.debug("Wrote fleet to %s and %s", series_path, meta_path)
