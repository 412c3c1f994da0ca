from __future__ import annotations

"""Pipeline stages.

Each stage reads its predecessor's artifacts from the run directory and
writes its own, so running the stages one by one is the same as
:func:`fedwind.pipeline.run_pipeline`. Every stage returns a JSON-able
summary.

Random streams are derived from the run seed, a stage key and the method's
position in :data:`fedwind.config.METHODS`, so adding a baseline never
changes the results of another method.
"""

import logging
import math
from typing import Any

import numpy as np
import pandas as pd

from ..autosplit.tree import ClusterTree, auto_split, leaf_labels
from ..config import METHODS, FedKMeansConfig, RunConfig
from ..data.ingest import load_fleet, load_meta, save_fleet
from ..data.models import Fleet
from ..data.spatial import nearest_neighbour_subsample
from ..data.synthetic import fleet_spec_dict, generate_synthetic_fleet
from ..errors import EmptyCluster, InsufficientHistory, InvalidParams
from ..eval.agreement import adjusted_rand_index
from ..eval.grouping import (
    GroupingResult,
    flat_fed_kmeans_grouping,
    geo_grouping,
    grouping_from_labels,
)
from ..eval.metrics import MetricsReport, regression_metrics
from ..eval.pca import pca_frame, pca_project
from ..eval.report import MethodSummary, emit_report
from ..features.fingerprint import FEATURES, fingerprint, read_fingerprints, write_fingerprints
from ..features.profile import cluster_profile
from ..features.scaling import FeatureMatrix, Scaler, standardise
from ..fedcluster.federated import write_centroids
from ..fedcluster.models import AuditLog
from ..forecast.filtering import filter_uninformative_clients
from ..forecast.model import load_model, save_model
from ..forecast.rolling import rolling_forecast, trajectories_frame
from ..forecast.training import (
    evaluate_clients,
    history_frame,
    pooled_windows,
    train_centralized,
    train_cluster_fl,
)
from ..forecast.windows import ClientDataset, make_client_dataset
from ..utils.io import read_json, write_frame, write_json, write_lines
from ..utils.pool import ordered_map
from ..utils.rng import derive
from .artifacts import RunPaths, require

log = logging.getLogger(__name__)

__all__ = [
    "stage_generate",
    "stage_features",
    "stage_cluster",
    "stage_train",
    "stage_forecast",
    "stage_evaluate",
    "excluded_groups",
]

# stream keys per stage
_CLUSTER, _TRAIN, _FORECAST = 1, 2, 3
_AUTO = {"drs_auto": "drs", "kpp_auto": "kmeanspp"}
_METRIC_COLUMNS = ["mse", "rmse", "mae", "r2", "n_points", "degenerate"]


def _stream(config: RunConfig, stage: int, method: str, *keys: int) -> np.random.Generator:
    return derive(config.seed, stage, METHODS.index(method), *keys)


def _read_csv(path: Any, **kwargs: Any) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip", **kwargs)


def _load_fleet(stage: str, paths: RunPaths) -> Fleet:
    require(stage, paths.series, paths.meta)
    return load_fleet(paths.series, paths.meta)


def _load_matrix(stage: str, paths: RunPaths) -> FeatureMatrix:
    require(stage, paths.features, paths.scaler)
    frame = _read_csv(paths.features, dtype={"id": str})
    scaler = Scaler.from_dict(read_json(paths.scaler))
    rows = frame[list(FEATURES)].to_numpy(dtype=np.float64)
    return FeatureMatrix(rows, scaler, frame["id"].tolist())


def _raw_zero_ratios(stage: str, paths: RunPaths, ids: list[str]) -> np.ndarray:
    require(stage, paths.fingerprints)
    fp_ids, fps = read_fingerprints(paths.fingerprints)
    by_id = {i: f.zero_ratio for i, f in zip(fp_ids, fps, strict=True)}
    return np.array([by_id[i] for i in ids], dtype=np.float64)


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def stage_generate(config: RunConfig) -> dict[str, Any]:
    paths = RunPaths.of(config)
    source = config.data
    if source.synthetic is not None:
        synth = source.synthetic
        seed = config.fleet_seed()
        fleet = generate_synthetic_fleet(synth.archetypes, synth.n_steps, seed, start=synth.start)
        write_json(paths.fleet_spec, fleet_spec_dict(synth.archetypes, synth.n_steps, seed))
    else:
        assert source.series_path is not None and source.meta_path is not None
        fleet = load_fleet(source.series_path, source.meta_path)
    if source.subsample is not None:
        fleet = nearest_neighbour_subsample(fleet, source.subsample)
    save_fleet(fleet, paths.series, paths.meta)
    archetypes = [a for a in fleet.archetypes if a]
    return {
        "turbines": len(fleet),
        "steps": len(fleet[0]),
        "archetypes": {a: archetypes.count(a) for a in sorted(set(archetypes))},
    }


# ---------------------------------------------------------------------------
# features
# ---------------------------------------------------------------------------


def stage_features(config: RunConfig) -> dict[str, Any]:
    paths = RunPaths.of(config)
    fleet = _load_fleet("features", paths)
    fps = [fingerprint(t) for t in fleet]
    write_fingerprints(paths.fingerprints, fleet.ids, fps)
    matrix = standardise(fps, ids=fleet.ids, standardise_zero_ratio=config.standardise_zero_ratio)
    frame = pd.DataFrame(matrix.rows, columns=list(FEATURES))
    frame.insert(0, "id", matrix.ids)
    write_frame(paths.features, frame)
    write_json(paths.scaler, matrix.scaler.to_dict())
    return {
        "turbines": matrix.n,
        "features": list(FEATURES),
        "degenerate_columns": [
            c for c, flag in zip(FEATURES, matrix.scaler.degenerate, strict=True) if flag
        ],
    }


# ---------------------------------------------------------------------------
# cluster
# ---------------------------------------------------------------------------


def excluded_groups(
    labels: np.ndarray,
    outlier: np.ndarray,
    zero_ratios: np.ndarray,
    config: RunConfig,
) -> list[int]:
    """Outlier-leaf groups left out of forecasting under the configured rule."""
    if not config.exclude_outlier_leaves:
        return []
    out = []
    for g in np.unique(labels):
        mask = labels == g
        if not outlier[mask].all():
            continue
        if config.exclusion_rule == "all_outliers":
            out.append(int(g))
        elif float(zero_ratios[mask].mean()) >= config.shutdown_zero_ratio:
            out.append(int(g))
    return out


def _auto_tree(
    method: str, config: RunConfig, matrix: FeatureMatrix, cache: dict[str, ClusterTree]
) -> ClusterTree:
    if method not in cache:
        cache[method] = auto_split(
            matrix,
            config.grid,
            config.thresholds,
            _stream(config, _CLUSTER, method),
            init=_AUTO[method],  # type: ignore[arg-type]
            max_workers=config.max_workers,
            audit=True,
        )
    return cache[method]


def _write_labels(
    paths: RunPaths, method: str, ids: list[str], labels: np.ndarray, outlier: np.ndarray | None
) -> None:
    flags = np.zeros(len(ids), dtype=np.int64) if outlier is None else outlier.astype(np.int64)
    frame = pd.DataFrame({"id": ids, "cluster": labels.astype(np.int64), "outlier_flag": flags})
    write_frame(paths.labels(method), frame)


def _cluster_one(
    method: str,
    config: RunConfig,
    paths: RunPaths,
    matrix: FeatureMatrix,
    zero_ratios: np.ndarray,
    cache: dict[str, ClusterTree],
) -> dict[str, Any]:
    ids = matrix.ids
    extra: dict[str, Any] = {}
    excluded: list[int] = []

    if method in _AUTO:
        tree = _auto_tree(method, config, matrix, cache)
        labels, outlier = leaf_labels(tree)
        grouping = grouping_from_labels(method, labels, matrix, outlier=outlier)
        write_json(paths.tree(method), tree.to_dict())
        write_lines(paths.audit(method), tree.audit_records())
        excluded = excluded_groups(grouping.labels, outlier, zero_ratios, config)
        extra = {"forced_splits": tree.n_forced, "silhouette_splits": tree.n_silhouette_splits}
        _write_labels(paths, method, ids, grouping.labels, outlier)

    elif method == "flat_fed_k":
        fed_cfg = FedKMeansConfig(
            n_clients=config.flat_n_clients, k_global=config.flat_k, c_rounds=config.flat_c_rounds
        )
        audit = AuditLog()
        grouping = flat_fed_kmeans_grouping(
            matrix,
            config.flat_k,
            fed_cfg,
            rng=_stream(config, _CLUSTER, method),
            audit=audit,
            max_workers=config.max_workers,
        )
        assert grouping.fed_result is not None
        write_centroids(paths.centroids(method), grouping.fed_result, fed_cfg, config.seed)
        audit.write(paths.audit(method))
        _write_labels(paths, method, ids, grouping.labels, None)

    elif method in ("geo_auto", "geo_fixed"):
        require("cluster", paths.meta)
        metas = load_meta(paths.meta)
        if [m.id for m in metas] != ids:
            raise InvalidParams("meta.csv and features.csv list different turbines")
        k = None if method == "geo_auto" else config.geo_k
        grouping = geo_grouping(
            metas, k, _stream(config, _CLUSTER, method), k_range=config.geo_k_range, method=method
        )
        _write_labels(paths, method, ids, grouping.labels, None)

    elif method == "single_global":
        grouping = GroupingResult(method, np.zeros(len(ids), dtype=np.int64), 1, 0.0)
        _write_labels(paths, method, ids, grouping.labels, None)

    elif method == "centralized":
        tree = _auto_tree("drs_auto", config, matrix, cache)
        leaf, outlier = leaf_labels(tree)
        skip = set(excluded_groups(leaf, outlier, zero_ratios, config))
        candidates = [g for g in range(int(leaf.max()) + 1) if g not in skip]
        if config.centralized_cluster is not None:
            chosen = config.centralized_cluster
            if chosen not in candidates:
                raise InvalidParams(
                    f"centralized_cluster {chosen} is not an eligible drs_auto leaf"
                )
        elif candidates:
            sizes = np.bincount(leaf)
            chosen = max(candidates, key=lambda g: (sizes[g], -g))
        else:
            raise EmptyCluster("centralized: every drs_auto leaf is excluded")
        members = np.flatnonzero(leaf == chosen)
        grouping = GroupingResult(method, np.zeros(len(members), dtype=np.int64), 1, 0.0)
        extra = {"source_method": "drs_auto", "source_cluster": chosen}
        _write_labels(paths, method, [ids[i] for i in members], grouping.labels, None)

    else:  # pragma: no cover - RunConfig validates the method name
        raise InvalidParams(f"unknown method {method!r}")

    payload = {**grouping.to_dict(), "excluded_groups": excluded, **extra}
    write_json(paths.grouping(method), payload)
    log.info(
        "%s: %d groups, silhouette %.4f, excluded %s",
        method,
        grouping.k,
        grouping.quality,
        excluded,
    )
    return {"k": grouping.k, "quality": grouping.quality, "excluded_groups": excluded}


def stage_cluster(config: RunConfig) -> dict[str, Any]:
    paths = RunPaths.of(config)
    matrix = _load_matrix("cluster", paths)
    zero_ratios = _raw_zero_ratios("cluster", paths, matrix.ids)
    cache: dict[str, ClusterTree] = {}
    return {
        method: _cluster_one(method, config, paths, matrix, zero_ratios, cache)
        for method in config.methods()
    }


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _read_labels(stage: str, paths: RunPaths, method: str) -> pd.DataFrame:
    require(stage, paths.labels(method), paths.grouping(method))
    return _read_csv(paths.labels(method), dtype={"id": str})


def _metric_row(m: MetricsReport) -> dict[str, Any]:
    return {c: getattr(m, c) for c in _METRIC_COLUMNS}


def _train_method(method: str, config: RunConfig, paths: RunPaths, fleet: Fleet) -> dict[str, Any]:
    labels = _read_labels("train", paths, method)
    info = read_json(paths.grouping(method))
    skip = set(info.get("excluded_groups", []))
    fc = config.forecast

    excluded_rows: list[dict[str, Any]] = [
        {"id": tid, "group": int(g), "reason": "outlier_leaf"}
        for tid, g in zip(labels["id"], labels["cluster"], strict=True)
        if int(g) in skip
    ]
    groups = sorted(int(g) for g in labels["cluster"].unique() if int(g) not in skip)
    filter_all = not config.filter_clusters

    def prepare(g: int) -> tuple[int, list[ClientDataset], list[tuple[ClientDataset, str]]]:
        members = labels.loc[labels["cluster"] == g, "id"].tolist()
        clients = [
            make_client_dataset(
                fleet.by_id(tid),
                lookback=fc.lookback,
                horizon=fc.horizon,
                train_fraction=fc.train_fraction,
                val_fraction=fc.val_fraction,
                norm=fc.normalization,
            )
            for tid in members
        ]
        dropped: list[tuple[ClientDataset, str]] = []
        if config.apply_client_filter and (filter_all or g in config.filter_clusters):
            clients, dropped = filter_uninformative_clients(clients)
        return g, clients, dropped

    def train(g: int) -> dict[str, Any]:
        g, clients, dropped = prepare(g)
        if not clients:
            log.warning("%s cluster %d: every client was filtered out, not trained", method, g)
            return {"group": g, "params": None, "history": [], "clients": [], "dropped": dropped}
        rng = _stream(config, _TRAIN, method, g)
        label = f"{method}/cluster {g}"
        if method == "centralized":
            params, history = train_centralized(clients, config.hyper, rng, label=label)
        else:
            params, history = train_cluster_fl(clients, config.hyper, rng, label=label)
        return {
            "group": g,
            "params": params,
            "history": history,
            "clients": clients,
            "dropped": dropped,
        }

    outcomes = ordered_map(train, groups, max_workers=config.max_workers)

    client_rows: list[dict[str, Any]] = []
    pooled_rows: list[dict[str, Any]] = []
    overall: dict[str, tuple[list[np.ndarray], list[np.ndarray]]] = {
        "train": ([], []),
        "test": ([], []),
    }
    trained: list[int] = []
    skipped: list[int] = []
    for out in outcomes:
        g = out["group"]
        excluded_rows.extend(
            {"id": c.turbine_id, "group": g, "reason": reason} for c, reason in out["dropped"]
        )
        params = out["params"]
        if params is None:
            skipped.append(g)
            continue
        trained.append(g)
        clients = out["clients"]
        save_model(
            paths.model(method, g),
            params,
            lookback=config.forecast.lookback,
            normalization=config.forecast.normalization,
            hyper=config.hyper,
            seed=config.seed,
            extra={"method": method, "cluster": g, "clients": [c.turbine_id for c in clients]},
        )
        write_frame(paths.history(method, g), history_frame(out["history"]))
        for split in ("train", "test"):
            for tid, m in evaluate_clients(params, clients, split):
                client_rows.append({"id": tid, "group": g, "split": split, **_metric_row(m)})
            pool = pooled_windows(clients, split)
            if len(pool) == 0:
                continue
            pred = params.predict(pool.inputs)
            overall[split][0].append(pool.targets)
            overall[split][1].append(pred)
            m = regression_metrics(pool.targets, pred)
            pooled_rows.append({"group": str(g), "split": split, **_metric_row(m)})
    for split, (truth, pred) in overall.items():
        if truth:
            m = regression_metrics(np.concatenate(truth), np.concatenate(pred))
            pooled_rows.append({"group": "all", "split": split, **_metric_row(m)})

    write_frame(
        paths.client_metrics(method),
        pd.DataFrame(client_rows, columns=["id", "group", "split", *_METRIC_COLUMNS]),
    )
    write_frame(
        paths.pooled_metrics(method),
        pd.DataFrame(pooled_rows, columns=["group", "split", *_METRIC_COLUMNS]),
    )
    write_frame(
        paths.excluded(method), pd.DataFrame(excluded_rows, columns=["id", "group", "reason"])
    )
    write_json(
        paths.training(method),
        {
            "method": method,
            "trained_groups": trained,
            "skipped_groups": skipped,
            "excluded_groups": sorted(skip),
        },
    )
    return {
        "trained_groups": trained,
        "skipped_groups": skipped,
        "excluded_clients": len(excluded_rows),
    }


def stage_train(config: RunConfig) -> dict[str, Any]:
    paths = RunPaths.of(config)
    fleet = _load_fleet("train", paths)
    return {method: _train_method(method, config, paths, fleet) for method in config.methods()}


# ---------------------------------------------------------------------------
# forecast
# ---------------------------------------------------------------------------


def _forecast_method(
    method: str, config: RunConfig, paths: RunPaths, fleet: Fleet
) -> dict[str, Any]:
    require("forecast", paths.training(method))
    info = read_json(paths.training(method))
    trajectories = []
    for g in info["trained_groups"]:
        require("forecast", paths.model(method, g))
        model = load_model(paths.model(method, g))
        members = list(model.extra.get("clients", []))
        if not members:
            continue
        rng = _stream(config, _FORECAST, method, g)
        series = fleet.by_id(members[int(rng.integers(len(members)))])
        start = math.floor(config.forecast.train_fraction * len(series))
        try:
            traj = rolling_forecast(
                model,
                series,
                start,
                horizon=config.forecast.rolling_horizon,
                mode=config.forecast.mode,
                lookback=model.lookback,
                norm=model.normalization,
            )
        except InsufficientHistory as e:
            log.warning("%s cluster %d: no forecast (%s)", method, g, e)
            continue
        trajectories.append(traj)
    write_frame(paths.forecast(method), trajectories_frame(trajectories))
    return {"trajectories": len(trajectories), "mode": config.forecast.mode}


def stage_forecast(config: RunConfig) -> dict[str, Any]:
    paths = RunPaths.of(config)
    fleet = _load_fleet("forecast", paths)
    return {method: _forecast_method(method, config, paths, fleet) for method in config.methods()}


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _pooled_reports(frame: pd.DataFrame) -> dict[str, MetricsReport]:
    out = {}
    for _, row in frame[frame["group"] == "all"].iterrows():
        out[str(row["split"])] = MetricsReport(
            mse=float(row["mse"]),
            rmse=float(row["rmse"]),
            mae=float(row["mae"]),
            r2=float(row["r2"]),
            n_points=int(row["n_points"]),
            degenerate=bool(row["degenerate"]),
        )
    return out


def _archetypes(paths: RunPaths, ids: list[str]) -> list[str] | None:
    meta = pd.read_csv(paths.meta, dtype=str, keep_default_na=False)
    if "archetype" not in meta.columns:
        return None
    by_id = dict(zip(meta["id"], meta["archetype"], strict=True))
    values = [by_id.get(i, "") for i in ids]
    return values if all(values) else None


def stage_evaluate(config: RunConfig) -> dict[str, Any]:
    paths = RunPaths.of(config)
    matrix = _load_matrix("evaluate", paths)
    zero_ratios = _raw_zero_ratios("evaluate", paths, matrix.ids)
    require("evaluate", paths.meta)
    archetypes = _archetypes(paths, matrix.ids)
    projection = pca_project(matrix, dims=min(3, matrix.d))
    position = {tid: i for i, tid in enumerate(matrix.ids)}

    summaries: list[MethodSummary] = []
    evaluation: dict[str, Any] = {}
    for method in config.methods():
        labels_frame = _read_labels("evaluate", paths, method)
        require(
            "evaluate",
            paths.training(method),
            paths.pooled_metrics(method),
            paths.client_metrics(method),
        )
        idx = np.array([position[t] for t in labels_frame["id"]], dtype=np.int64)
        labels = labels_frame["cluster"].to_numpy(dtype=np.int64)
        outlier = labels_frame["outlier_flag"].to_numpy(dtype=bool)
        sub = matrix.subset(idx)
        grouping = grouping_from_labels(method, labels, sub, outlier=outlier)
        profile = cluster_profile(sub, grouping.labels, zero_ratios[idx]).to_frame()

        training = read_json(paths.training(method))
        histories = {
            g: _read_csv(paths.history(method, g))
            for g in training["trained_groups"]
            if paths.history(method, g).exists()
        }
        pooled = _pooled_reports(_read_csv(paths.pooled_metrics(method), dtype={"group": str}))
        per_turbine = _read_csv(paths.client_metrics(method), dtype={"id": str})
        forecasts = None
        if paths.forecast(method).exists():
            forecasts = _read_csv(paths.forecast(method), dtype={"id": str})
        summaries.append(
            MethodSummary(
                method=method,
                grouping=grouping,
                pooled=pooled,
                per_turbine=per_turbine[["id", "group", "split", "mse", "rmse", "mae", "r2"]],
                profile=profile,
                pca=pca_frame(projection.rows[idx], sub.ids, grouping.labels),
                histories=histories,
                forecasts=forecasts,
            )
        )
        ari = None
        if archetypes is not None and len(idx) == matrix.n:
            ari = adjusted_rand_index(np.array(archetypes), grouping.labels)
        evaluation[method] = {
            "n_groups": grouping.k,
            "silhouette": grouping.quality,
            "ari_vs_archetype": ari,
            "pooled": {split: m.to_dict() for split, m in sorted(pooled.items())},
        }

    emit_report(summaries, paths.root)
    write_json(
        paths.evaluation,
        {
            "explained_variance_ratio": projection.explained_variance_ratio.tolist(),
            "methods": evaluation,
        },
    )
    return evaluation
