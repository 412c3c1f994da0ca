from __future__ import annotations

from pathlib import Path
from typing import Any

from pydantic import ValidationError

from .config import RunConfig, load_run_config
from .errors import ConfigError
from .pipeline import run_pipeline, run_stage

__all__ = ["load_run_config", "run", "stage"]


def _resolve(config: RunConfig | str | Path | None, overrides: dict[str, Any] | None) -> RunConfig:
    if not isinstance(config, RunConfig):
        return load_run_config(config, overrides)
    if not overrides:
        return config
    tree = config.model_dump(mode="json")
    for key, value in overrides.items():
        if value is None:
            continue
        *parents, leaf = key.split(".")
        node = tree
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def run(
    config: RunConfig | str | Path | None = None,
    *,
    overrides: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """Run the whole pipeline. ``config`` is a RunConfig or a YAML/JSON path.

    Returns the per-stage summaries; artifacts land in ``out_dir``.
    """
    return run_pipeline(_resolve(config, overrides))


def stage(
    name: str,
    config: RunConfig | str | Path | None = None,
    *,
    overrides: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """Run a single stage on an existing run directory."""
    return run_stage(name, _resolve(config, overrides))
