from __future__ import annotations

"""Where each stage reads and writes, and the run manifest."""

import json
import logging
import platform
from dataclasses import dataclass
from datetime import datetime, timezone

UTC = timezone.utc
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .. import __version__
from ..config import RunConfig, config_hash
from ..errors import MissingArtifact
from ..utils.io import read_json, sha256_file, write_json

log = logging.getLogger(__name__)

__all__ = ["RunPaths", "require", "write_manifest", "STAGES"]

STAGES: tuple[str, ...] = ("generate", "features", "cluster", "train", "forecast", "evaluate")
MANIFEST = "manifest.json"


@dataclass(frozen=True)
class RunPaths:
    root: Path

    @classmethod
    def of(cls, config: RunConfig) -> RunPaths:
        return cls(Path(config.out_dir).expanduser().resolve())

    # data
    @property
    def meta(self) -> Path:
        return self.root / "data" / "meta.csv"

    @property
    def series(self) -> Path:
        return self.root / "data" / "series.csv"

    @property
    def fleet_spec(self) -> Path:
        return self.root / "data" / "fleet.json"

    # features
    @property
    def fingerprints(self) -> Path:
        return self.root / "features" / "fingerprints.csv"

    @property
    def features(self) -> Path:
        return self.root / "features" / "features.csv"

    @property
    def scaler(self) -> Path:
        return self.root / "features" / "scaler.json"

    # per method
    def method(self, method: str) -> Path:
        return self.root / method

    def labels(self, method: str) -> Path:
        return self.method(method) / "labels.csv"

    def grouping(self, method: str) -> Path:
        return self.method(method) / "grouping.json"

    def tree(self, method: str) -> Path:
        return self.method(method) / "tree.json"

    def centroids(self, method: str) -> Path:
        return self.method(method) / "centroids.json"

    def audit(self, method: str) -> Path:
        return self.method(method) / "audit.jsonl"

    def model(self, method: str, group: int) -> Path:
        return self.method(method) / "models" / f"cluster_{group}.json"

    def history(self, method: str, group: int) -> Path:
        return self.method(method) / "history" / f"cluster_{group}.csv"

    def training(self, method: str) -> Path:
        return self.method(method) / "training.json"

    def client_metrics(self, method: str) -> Path:
        return self.method(method) / "client_metrics.csv"

    def pooled_metrics(self, method: str) -> Path:
        return self.method(method) / "pooled_metrics.csv"

    def excluded(self, method: str) -> Path:
        return self.method(method) / "excluded.csv"

    def forecast(self, method: str) -> Path:
        return self.method(method) / "forecast.csv"

    @property
    def evaluation(self) -> Path:
        return self.root / "evaluation.json"

    @property
    def manifest(self) -> Path:
        return self.root / MANIFEST


def require(stage: str, *paths: Path) -> None:
    for p in paths:
        if not p.exists():
            raise MissingArtifact(stage, p)


def _versions() -> dict[str, str]:
    return {
        "fedwind": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pandas": pd.__version__,
    }


def write_manifest(config: RunConfig, paths: RunPaths, stage: str) -> Path:
    """Record ``stage`` as executed and re-hash every artifact under the run root.

    ``created_at`` is the only field that differs between identical runs.
    """
    stages: list[str] = []
    if paths.manifest.exists():
        try:
            stages = list(read_json(paths.manifest).get("stages", []))
        except (OSError, json.JSONDecodeError):
            log.warning("Ignoring unreadable manifest at %s", paths.manifest)
    if stage not in stages:
        stages.append(stage)
    stages.sort(key=lambda s: STAGES.index(s) if s in STAGES else len(STAGES))

    artifacts = {
        p.relative_to(paths.root).as_posix(): sha256_file(p)
        for p in sorted(paths.root.rglob("*"))
        if p.is_file() and p.name != MANIFEST
    }
    payload: dict[str, Any] = {
        "config_hash": config_hash(config),
        "seed": config.seed,
        "versions": _versions(),
        "stages": stages,
        "artifacts": artifacts,
        "created_at": datetime.now(UTC).isoformat(timespec="seconds"),
    }
    return write_json(paths.manifest, payload)
