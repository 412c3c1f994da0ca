from __future__ import annotations

from .ingest import load_fleet, load_meta, save_fleet
from .models import Fleet, SplitSpec, TurbineMeta, TurbineSeries
from .spatial import nearest_neighbour_subsample
from .split import chronological_split, split_spec
from .synthetic import PRESETS, ArchetypeParams, fleet_spec_dict, generate_synthetic_fleet

__all__ = [
    "ArchetypeParams",
    "Fleet",
    "PRESETS",
    "SplitSpec",
    "TurbineMeta",
    "TurbineSeries",
    "chronological_split",
    "fleet_spec_dict",
    "generate_synthetic_fleet",
    "load_fleet",
    "load_meta",
    "nearest_neighbour_subsample",
    "save_fleet",
    "split_spec",
]
