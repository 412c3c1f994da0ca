from __future__ import annotations

"""fedwind.pipeline

generate -> features -> cluster -> train -> forecast -> evaluate, each stage
reading the previous one's artifacts from ``config.out_dir``.
"""

import logging
import time
from collections.abc import Callable
from typing import Any

from ..config import RunConfig
from ..errors import ConfigError, FedwindError, MissingArtifact, StageError
from ..utils.io import write_json
from .artifacts import STAGES, RunPaths, write_manifest
from .stages import (
    stage_cluster,
    stage_evaluate,
    stage_features,
    stage_forecast,
    stage_generate,
    stage_train,
)

log = logging.getLogger(__name__)

__all__ = ["STAGES", "RunPaths", "run_stage", "run_pipeline"]

_STAGE_FUNCS: dict[str, Callable[[RunConfig], dict[str, Any]]] = {
    "generate": stage_generate,
    "features": stage_features,
    "cluster": stage_cluster,
    "train": stage_train,
    "forecast": stage_forecast,
    "evaluate": stage_evaluate,
}


def run_stage(stage: str, config: RunConfig) -> dict[str, Any]:
    """Run one stage and refresh the manifest.

    Errors other than missing inputs and bad configuration are re-raised as
    :class:`StageError` naming the stage.
    """
    if stage not in _STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}")
    paths = RunPaths.of(config)
    paths.root.mkdir(parents=True, exist_ok=True)
    log.info("Stage %s: start (out=%s)", stage, paths.root)
    t0 = time.perf_counter()
    try:
        summary = _STAGE_FUNCS[stage](config)
    except (MissingArtifact, ConfigError, StageError):
        raise
    except FedwindError as e:
        raise StageError(stage, e) from e
    write_json(paths.root / "config.json", config.model_dump(mode="json", exclude={"out_dir"}))
    write_manifest(config, paths, stage)
    log.info("Stage %s: done in %.1fs", stage, time.perf_counter() - t0)
    return summary


def run_pipeline(config: RunConfig) -> dict[str, Any]:
    """Every stage in order; returns the per-stage summaries."""
    return {stage: run_stage(stage, config) for stage in STAGES}
