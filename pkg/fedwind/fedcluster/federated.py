from __future__ import annotations

"""Federated k-means over logical clients.

Rows are split into private shards. Only aggregates cross a shard boundary:
shard sizes, per-client sums of squared distances, the rows picked as
centres, local centroids and their counts. Everything that crosses is written
to an :class:`AuditLog` when one is supplied.
"""

import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np

from ..config import FedKMeansConfig
from ..errors import DimensionMismatch, InvalidParams, TooManyClients
from ..features.scaling import FeatureMatrix
from ..utils.io import write_json
from ..utils.pool import ordered_map
from ..utils.rng import resolve
from .kmeans import as_rows, assign, cluster_means, inertia, kmeanspp_init, sq_distances
from .models import INIT_ROUND, AuditLog, CentroidSet, ClientShard, FedKMeansResult, LocalUpdate

log = logging.getLogger(__name__)

__all__ = [
    "partition_clients",
    "drs_init",
    "local_lloyd_step",
    "aggregate_centroids",
    "federated_kmeans",
    "write_centroids",
]


def partition_clients(
    matrix: FeatureMatrix | np.ndarray, n_clients: int, rng: np.random.Generator
) -> list[ClientShard]:
    """Random permutation cut into ``n_clients`` near-equal chunks (sizes differ by <= 1)."""
    n = len(as_rows(matrix))
    if n_clients < 1:
        raise InvalidParams(f"n_clients must be >= 1, got {n_clients}")
    if n_clients > n:
        raise TooManyClients(f"{n_clients} clients for {n} rows")
    perm = rng.permutation(n)
    return [
        ClientShard(client_id=i, row_indices=np.sort(chunk))
        for i, chunk in enumerate(np.array_split(perm, n_clients))
    ]


def drs_init(
    shards: list[ClientShard],
    matrix: FeatureMatrix | np.ndarray,
    k: int,
    rng: np.random.Generator,
    *,
    audit: AuditLog | None = None,
) -> CentroidSet:
    """Double roulette selection of ``k`` initial centres.

    First centre: a client with probability proportional to its shard size,
    then a uniform row inside it. Each further centre: a client with
    probability D_p / sum(D_q), where D_p is the client's total minimum squared
    distance to the chosen centres, then a row of that client with probability
    proportional to its own squared distance. When every D_p is zero the pick
    is uniform over the rows not chosen yet.
    """
    rows = as_rows(matrix)
    total_rows = sum(len(s) for s in shards)
    if not 1 <= k <= total_rows:
        raise InvalidParams(f"k must lie in [1, {total_rows}], got {k}")

    sizes = np.array([len(s) for s in shards], dtype=np.float64)
    for s in shards:
        _audit(audit, INIT_ROUND, s.client_id, "shard_size", len(s))

    j = int(rng.choice(len(shards), p=sizes / sizes.sum()))
    first = int(shards[j].row_indices[rng.integers(len(shards[j]))])
    chosen = [first]
    _audit(audit, INIT_ROUND, shards[j].client_id, "centre", rows[first])

    # each client keeps its own min squared distance to the broadcast centres
    local_d2 = [sq_distances(rows[s.row_indices], rows[[first]])[:, 0] for s in shards]
    for _ in range(1, k):
        totals = np.array([float(d.sum()) for d in local_d2])
        for s, t in zip(shards, totals, strict=True):
            _audit(audit, INIT_ROUND, s.client_id, "d2_total", t)
        grand = totals.sum()
        if grand > 0:
            j = int(rng.choice(len(shards), p=totals / grand))
            d = local_d2[j]
            i = int(rng.choice(len(d), p=d / d.sum()))
            pick = int(shards[j].row_indices[i])
        else:
            free = [np.setdiff1d(s.row_indices, chosen) for s in shards]
            counts = np.array([len(f) for f in free], dtype=np.float64)
            for s, c in zip(shards, counts, strict=True):
                _audit(audit, INIT_ROUND, s.client_id, "unchosen_count", c)
            j = int(rng.choice(len(shards), p=counts / counts.sum()))
            pick = int(free[j][rng.integers(len(free[j]))])
        chosen.append(pick)
        _audit(audit, INIT_ROUND, shards[j].client_id, "centre", rows[pick])
        for s, d in zip(shards, local_d2, strict=True):
            np.minimum(d, sq_distances(rows[s.row_indices], rows[[pick]])[:, 0], out=d)

    log.debug("DRS picked rows %s", chosen)
    return CentroidSet(rows[chosen].copy())


def local_lloyd_step(
    shard: ClientShard, matrix: FeatureMatrix | np.ndarray, centres: CentroidSet
) -> LocalUpdate:
    """One assignment pass and local means on a single shard."""
    local = as_rows(matrix)[shard.row_indices]
    if local.shape[1] != centres.d:
        raise DimensionMismatch(f"rows have d={local.shape[1]}, centres d={centres.d}")
    labels = assign(local, centres)
    means, counts = cluster_means(local, labels, centres.k)
    return LocalUpdate(client_id=shard.client_id, local_centroids=means, counts=counts)


def aggregate_centroids(updates: list[LocalUpdate], previous: CentroidSet) -> CentroidSet:
    """Sample-weighted mean of local centroids; clusters nobody reported keep ``previous``.

    Summation runs in client_id order so the result does not depend on the
    order replies arrived in.
    """
    for u in updates:
        if u.k != previous.k or u.d != previous.d:
            raise DimensionMismatch(
                f"client {u.client_id} sent {u.k}x{u.d} centroids, "
                f"expected {previous.k}x{previous.d}"
            )
    ordered = sorted(updates, key=lambda u: u.client_id)
    out = previous.centres.copy()
    if not ordered:
        return CentroidSet(out)
    counts = np.array([u.counts for u in ordered], dtype=np.float64)  # clients x k
    totals = counts.sum(axis=0)
    for c in range(previous.k):
        if totals[c] == 0:
            continue
        acc = np.zeros(previous.d)
        for u, n_c in zip(ordered, counts[:, c], strict=True):
            if n_c:
                acc = acc + (n_c / totals[c]) * u.local_centroids[c]
        out[c] = acc
    return CentroidSet(out)


def _audit(audit: AuditLog | None, round_: int, client_id: int, kind: str, payload: Any) -> None:
    if audit is not None:
        audit.record(round_, client_id, kind, payload)


def federated_kmeans(
    matrix: FeatureMatrix | np.ndarray,
    config: FedKMeansConfig,
    rng: np.random.Generator | None = None,
    *,
    init: Literal["drs", "kmeanspp"] = "drs",
    audit: AuditLog | None = None,
    max_workers: int = 1,
) -> FedKMeansResult:
    """Partition, seed, run exactly ``c_rounds`` rounds, then label every row.

    ``init="kmeanspp"`` swaps DRS for centralized k-means++ seeding and keeps
    everything else identical. Without ``rng`` the stream comes from
    ``config.seed``.
    """
    rows = as_rows(matrix)
    rng = resolve(rng, config.seed, "federated k-means")
    if config.k_global > len(rows):
        raise InvalidParams(f"k_global={config.k_global} exceeds {len(rows)} rows")
    shards = partition_clients(rows, config.n_clients, rng)
    if init == "drs":
        centres = drs_init(shards, rows, config.k_global, rng, audit=audit)
    elif init == "kmeanspp":
        centres = kmeanspp_init(rows, config.k_global, rng)
    else:
        raise InvalidParams(f"unknown init strategy {init!r}")
    initial = centres

    for r in range(config.c_rounds):
        updates = ordered_map(
            lambda s, c=centres: local_lloyd_step(s, rows, c), shards, max_workers=max_workers
        )
        if audit is not None:
            for u in updates:
                audit.record(r, u.client_id, "local_centroid", u.local_centroids[u.present])
                audit.record(r, u.client_id, "count", u.counts)
        centres = aggregate_centroids(updates, centres)

    labels = assign(rows, centres)
    result = FedKMeansResult(
        labels=labels,
        centroids=centres,
        inertia=inertia(rows, centres),
        initial=initial,
        shards=shards,
    )
    log.debug(
        "federated k-means n=%d k=%d c=%d -> %d labels, inertia %.6g",
        config.n_clients,
        config.k_global,
        config.c_rounds,
        result.n_labels,
        result.inertia,
    )
    return result


def write_centroids(
    path: str | Path, result: FedKMeansResult, config: FedKMeansConfig, seed: int | None = None
) -> Path:
    payload = result.centroids.to_dict()
    payload["config"] = config.model_dump(mode="json")
    payload["seed"] = seed if seed is not None else config.seed
    payload["inertia"] = result.inertia
    return write_json(path, payload)
