from __future__ import annotations

"""fedwind.config

Validated run configuration. A config file (YAML or JSON) is a tree whose keys
match :class:`RunConfig` fields exactly; environment variables prefixed with
``FEDWIND_`` override file values (``__`` separates nested keys) and explicit
overrides (CLI flags) win over both.
"""

import hashlib
import json
import logging
import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError, MissingFile
from .utils.io import read_json_or_yaml

log = logging.getLogger(__name__)

ENV_PREFIX = "FEDWIND_"

Method = Literal[
    "drs_auto", "kpp_auto", "flat_fed_k", "geo_auto", "geo_fixed", "single_global", "centralized"
]
METHODS: tuple[str, ...] = (
    "drs_auto",
    "kpp_auto",
    "flat_fed_k",
    "geo_auto",
    "geo_fixed",
    "single_global",
    "centralized",
)
RollingMode = Literal["teacher_forced", "recursive"]

__all__ = [
    "ENV_PREFIX",
    "METHODS",
    "SyntheticArchetype",
    "SyntheticFleetSpec",
    "DataSource",
    "SplitThresholds",
    "ParamGrid",
    "FedKMeansConfig",
    "NormalizationConstants",
    "TrainHyper",
    "ForecastConfig",
    "RunConfig",
    "load_run_config",
    "env_overrides",
    "config_hash",
]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ---------------------------------------------------------------------------
# Data source
# ---------------------------------------------------------------------------


class SyntheticArchetype(_Model):
    """One generator entry; ``params`` override the named preset's values."""

    archetype: str
    count: int = Field(ge=1)
    params: dict[str, Any] = Field(default_factory=dict)


class SyntheticFleetSpec(_Model):
    archetypes: list[SyntheticArchetype] = Field(min_length=1)
    n_steps: int = Field(default=8760, ge=2)
    seed: int | None = None
    start: str = "2023-01-01T00:00:00"


class DataSource(_Model):
    series_path: str | None = None
    meta_path: str | None = None
    synthetic: SyntheticFleetSpec | None = None
    subsample: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _exactly_one_source(self) -> DataSource:
        has_files = self.series_path is not None or self.meta_path is not None
        if has_files and self.synthetic is not None:
            raise ValueError("data: give either series_path/meta_path or synthetic, not both")
        if not has_files and self.synthetic is None:
            raise ValueError("data: a source is required (series_path + meta_path, or synthetic)")
        if has_files and (self.series_path is None or self.meta_path is None):
            raise ValueError("data: series_path and meta_path must be given together")
        return self


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------


class SplitThresholds(_Model):
    tau_sil: float = 0.45
    tau_min: float = 0.3
    tau_large: float = 0.7

    @model_validator(mode="after")
    def _ordered(self) -> SplitThresholds:
        if not -1.0 <= self.tau_sil <= 1.0:
            raise ValueError("tau_sil must lie in [-1, 1]")
        if not 0.0 < self.tau_min < self.tau_large < 1.0:
            raise ValueError("thresholds must satisfy 0 < tau_min < tau_large < 1")
        return self


class ParamGrid(_Model):
    """Inclusive integer ranges searched per node: clients, clusters, rounds."""

    n_range: tuple[int, int] = (3, 9)
    k_range: tuple[int, int] = (3, 10)
    c_range: tuple[int, int] = (3, 10)

    @field_validator("n_range", "k_range", "c_range")
    @classmethod
    def _valid_range(cls, v: tuple[int, int]) -> tuple[int, int]:
        lo, hi = v
        if lo < 1 or hi < lo:
            raise ValueError(f"range {v} must satisfy 1 <= lo <= hi")
        return v

    def configurations(self) -> list[tuple[int, int, int]]:
        """All (n, k, c) triples in lexicographic order."""
        return [
            (n, k, c)
            for n in range(self.n_range[0], self.n_range[1] + 1)
            for k in range(self.k_range[0], self.k_range[1] + 1)
            for c in range(self.c_range[0], self.c_range[1] + 1)
        ]


class FedKMeansConfig(_Model):
    n_clients: int = Field(ge=1)
    k_global: int = Field(ge=1)
    c_rounds: int = Field(ge=1)
    seed: int | None = None


# ---------------------------------------------------------------------------
# Forecasting
# ---------------------------------------------------------------------------


class NormalizationConstants(_Model):
    wind_speed_ref: float = Field(default=25.0, gt=0)
    temp_min: float = -20.0
    temp_max: float = 40.0
    capacity_ref: float = Field(default=3000.0, gt=0)
    age_ref: float = Field(default=30.0, gt=0)

    @model_validator(mode="after")
    def _temp_range(self) -> NormalizationConstants:
        if self.temp_max <= self.temp_min:
            raise ValueError("temp_max must exceed temp_min")
        return self


class TrainHyper(_Model):
    local_epochs: int = Field(default=1, ge=1)
    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=1e-3, ge=0, lt=1)
    rounds: int = Field(default=30, ge=1)
    hidden_dim: int = Field(default=64, ge=2)
    optimizer: Literal["sgd", "adam"] = "adam"
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    init_scale: float = Field(default=0.1, gt=0)
    seed: int | None = None


class ForecastConfig(_Model):
    lookback: int = Field(default=24, ge=1)
    horizon: int = Field(default=3, ge=1)
    rolling_horizon: int = Field(default=24, ge=1)
    mode: RollingMode = "teacher_forced"
    train_fraction: float = Field(default=0.8, gt=0, lt=1)
    val_fraction: float = Field(default=0.1, ge=0, lt=1)
    normalization: NormalizationConstants = Field(default_factory=NormalizationConstants)

    @model_validator(mode="after")
    def _fractions(self) -> ForecastConfig:
        if self.val_fraction >= self.train_fraction:
            raise ValueError("val_fraction must be smaller than train_fraction")
        return self


# ---------------------------------------------------------------------------
# Run
# ---------------------------------------------------------------------------


class RunConfig(_Model):
    data: DataSource
    method: Method = "drs_auto"
    baselines: list[Method] = Field(default_factory=list)
    seed: int = 42
    out_dir: str = "runs/default"

    standardise_zero_ratio: bool = True
    thresholds: SplitThresholds = Field(default_factory=SplitThresholds)
    grid: ParamGrid = Field(default_factory=ParamGrid)
    flat_k: int = Field(default=6, ge=1)
    flat_n_clients: int = Field(default=5, ge=1)
    flat_c_rounds: int = Field(default=5, ge=1)
    geo_k: int = Field(default=7, ge=1)
    geo_k_range: tuple[int, int] = (2, 10)

    hyper: TrainHyper = Field(default_factory=TrainHyper)
    forecast: ForecastConfig = Field(default_factory=ForecastConfig)
    exclude_outlier_leaves: bool = True
    exclusion_rule: Literal["shutdown", "all_outliers"] = "shutdown"
    shutdown_zero_ratio: float = Field(default=0.9, ge=0, le=1)
    centralized_cluster: int | None = Field(default=None, ge=0)
    apply_client_filter: bool = False
    filter_clusters: list[int] = Field(default_factory=list)
    max_workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _methods(self) -> RunConfig:
        if len(set(self.baselines)) != len(self.baselines):
            raise ValueError("baselines must not repeat a method")
        lo, hi = self.geo_k_range
        if lo < 2 or hi < lo:
            raise ValueError("geo_k_range must satisfy 2 <= lo <= hi")
        return self

    def methods(self) -> list[str]:
        """Primary method first, then baselines, without duplicates."""
        out = [self.method]
        out.extend(m for m in self.baselines if m not in out)
        return out

    def fleet_seed(self) -> int:
        synth = self.data.synthetic
        if synth is not None and synth.seed is not None:
            return synth.seed
        return self.seed


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def _set_path(tree: dict[str, Any], path: list[str], value: Any) -> None:
    node = tree
    for key in path[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[path[-1]] = value


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, Any]:
    """Collect ``FEDWIND_*`` variables into a nested override tree.

    ``FEDWIND_HYPER__ROUNDS=5`` becomes ``{"hyper": {"rounds": 5}}``; values
    are parsed as YAML scalars so numbers and booleans keep their type.
    """
    env = os.environ if environ is None else environ
    tree: dict[str, Any] = {}
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX):
            continue
        path = [p.lower() for p in name[len(ENV_PREFIX) :].split("__") if p]
        if not path:
            continue
        raw = env[name]
        try:
            value = yaml.safe_load(raw) if raw != "" else None
        except yaml.YAMLError:
            log.warning("Could not parse %s=%r, using the raw string", name, raw)
            value = raw
        _set_path(tree, path, value)
    return tree


def _merge(base: dict[str, Any], extra: Mapping[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_run_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    *,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """Read, merge and validate a run configuration.

    Precedence (lowest first): file, ``FEDWIND_*`` environment, ``overrides``.
    Override keys may be dotted (``"hyper.rounds"``); ``None`` values are ignored
    so unset CLI flags do not clobber the file.
    """
    tree: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise MissingFile(p)
        try:
            loaded = read_json_or_yaml(p)
        except ValueError as e:
            raise ConfigError(f"cannot parse config {p}: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {p} must contain a mapping at the top level")
        tree = loaded

    tree = _merge(tree, env_overrides(environ))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        _set_path(tree, key.split("."), value)

    try:
        cfg = RunConfig.model_validate(tree)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
    log.debug("Loaded config (method=%s, seed=%d, out=%s)", cfg.method, cfg.seed, cfg.out_dir)
    return cfg


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical JSON form, ignoring where outputs are written."""
    payload = config.model_dump(mode="json", exclude={"out_dir"})
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
