from __future__ import annotations

"""Tests for fedwind.fedcluster: client partitioning, DRS seeding,
aggregation order, the single-client equivalence with centralized Lloyd and
the audit trail of values that leave a client."""

import json
from pathlib import Path

import numpy as np
import pytest

from fedwind.config import FedKMeansConfig
from fedwind.errors import DimensionMismatch, InvalidParams, TooManyClients
from fedwind.fedcluster import (
    AuditLog,
    CentroidSet,
    LocalUpdate,
    aggregate_centroids,
    assign,
    centralized_kmeans,
    centralized_lloyd,
    drs_init,
    federated_kmeans,
    kmeanspp_init,
    local_lloyd_step,
    partition_clients,
    write_centroids,
)
from fedwind.fedcluster.models import AUDIT_KINDS, INIT_ROUND
from fedwind.utils.rng import derive

SCHEMAS_DIR = Path(__file__).parent / "fixtures" / "schemas"


def _blobs(per: int = 20, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    centres = np.array([[0.0, 0.0], [50.0, 0.0], [0.0, 50.0]])
    rows = np.concatenate([c + rng.normal(0.0, 1.0, size=(per, 2)) for c in centres])
    return rows, np.repeat(np.arange(3), per)


def _same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    pairs = {(int(x), int(y)) for x, y in zip(a, b, strict=True)}
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


# ---------- partition ----------


def test_partition_covers_rows_with_near_equal_sorted_shards() -> None:
    shards = partition_clients(np.zeros((23, 2)), 5, np.random.default_rng(1))
    sizes = [len(s) for s in shards]
    assert max(sizes) - min(sizes) <= 1
    assert sorted(np.concatenate([s.row_indices for s in shards]).tolist()) == list(range(23))
    assert all(np.all(np.diff(s.row_indices) > 0) for s in shards)
    assert [s.client_id for s in shards] == [0, 1, 2, 3, 4]


def test_more_clients_than_rows() -> None:
    with pytest.raises(TooManyClients):
        partition_clients(np.zeros((3, 2)), 4, np.random.default_rng(0))


# ---------- DRS ----------


def test_drs_second_centre_follows_d2_probabilities() -> None:
    rows = np.array([[0.0], [1.0], [3.0]])
    # first centre uniform, second with probability d^2 / sum d^2
    expected = {
        0.0: (1 / 5 + 9 / 13) / 3,
        1.0: (1 / 10 + 4 / 13) / 3,
        3.0: (9 / 10 + 4 / 5) / 3,
    }
    trials = 3000
    seen = {0.0: 0, 1.0: 0, 3.0: 0}
    for t in range(trials):
        rng = derive(123, t)
        shards = partition_clients(rows, 2, rng)
        centres = drs_init(shards, rows, 2, rng)
        seen[float(centres.centres[1, 0])] += 1
    for value, p in expected.items():
        assert seen[value] / trials == pytest.approx(p, abs=0.04)


def test_drs_picks_distinct_rows_when_all_distances_vanish() -> None:
    rows = np.ones((6, 2))
    audit = AuditLog()
    shards = partition_clients(rows, 2, np.random.default_rng(0))
    centres = drs_init(shards, rows, 3, np.random.default_rng(0), audit=audit)
    assert centres.k == 3
    assert len(audit.payloads("unchosen_count")) == 2 * 2
    # unchosen counts shrink as rows are picked
    first_round = audit.payloads("unchosen_count")[:2]
    assert sum(float(p) for p in first_round) == 5.0


def test_drs_k_out_of_range() -> None:
    rows = np.zeros((3, 2))
    shards = partition_clients(rows, 1, np.random.default_rng(0))
    with pytest.raises(InvalidParams):
        drs_init(shards, rows, 4, np.random.default_rng(0))


# ---------- Lloyd pieces ----------


def test_assign_breaks_ties_to_lowest_centre() -> None:
    assert assign(np.array([[0.5]]), np.array([[0.0], [1.0]])).tolist() == [0]


def test_local_step_counts_and_means() -> None:
    rows = np.array([[0.0], [2.0], [10.0], [12.0]])
    shards = partition_clients(rows, 1, np.random.default_rng(0))
    update = local_lloyd_step(shards[0], rows, CentroidSet(np.array([[1.0], [11.0], [100.0]])))
    assert update.counts.tolist() == [2, 2, 0]
    np.testing.assert_allclose(update.local_centroids, [[1.0], [11.0], [0.0]])
    assert update.present.tolist() == [True, True, False]


def test_aggregate_weights_by_counts_and_keeps_unreported_centres() -> None:
    previous = CentroidSet(np.array([[0.0], [5.0], [9.0]]))
    updates = [
        LocalUpdate(0, np.array([[1.0], [0.0], [0.0]]), np.array([3, 0, 0])),
        LocalUpdate(1, np.array([[5.0], [7.0], [0.0]]), np.array([1, 2, 0])),
    ]
    out = aggregate_centroids(updates, previous)
    np.testing.assert_allclose(out.centres, [[2.0], [7.0], [9.0]])
    again = aggregate_centroids(list(reversed(updates)), previous)
    assert np.array_equal(out.centres, again.centres)


def test_aggregate_rejects_shape_mismatch() -> None:
    previous = CentroidSet(np.zeros((2, 2)))
    bad = LocalUpdate(0, np.zeros((3, 2)), np.ones(3, dtype=np.int64))
    with pytest.raises(DimensionMismatch):
        aggregate_centroids([bad], previous)


# ---------- federated k-means ----------


def test_single_client_equals_centralized_lloyd() -> None:
    rows, _ = _blobs(seed=4)
    cfg = FedKMeansConfig(n_clients=1, k_global=3, c_rounds=4)
    fed = federated_kmeans(rows, cfg, np.random.default_rng(7), init="kmeanspp")
    labels, centres = centralized_lloyd(rows, fed.initial, 4)
    np.testing.assert_array_equal(fed.centroids.centres, centres.centres)
    np.testing.assert_array_equal(fed.labels, labels)


def test_federated_kmeans_recovers_separated_blobs() -> None:
    rows, truth = _blobs(seed=2)
    cfg = FedKMeansConfig(n_clients=4, k_global=3, c_rounds=5)
    result = federated_kmeans(rows, cfg, np.random.default_rng(3))
    assert _same_partition(result.labels, truth)
    assert result.n_labels == 3


def test_federated_kmeans_is_reproducible() -> None:
    rows, _ = _blobs(seed=5)
    cfg = FedKMeansConfig(n_clients=3, k_global=4, c_rounds=3)
    a = federated_kmeans(rows, cfg, np.random.default_rng(9))
    b = federated_kmeans(rows, cfg, np.random.default_rng(9), max_workers=3)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.centroids.centres, b.centroids.centres)


def test_config_seed_stands_in_for_a_missing_stream() -> None:
    rows, _ = _blobs(seed=6)
    seeded = FedKMeansConfig(n_clients=3, k_global=3, c_rounds=3, seed=11)
    a = federated_kmeans(rows, seeded)
    b = federated_kmeans(rows, seeded.model_copy(update={"seed": None}), np.random.default_rng(11))
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.initial.centres, b.initial.centres)
    with pytest.raises(InvalidParams):
        federated_kmeans(rows, FedKMeansConfig(n_clients=3, k_global=3, c_rounds=3))


def test_audit_only_carries_aggregates() -> None:
    rows, _ = _blobs(seed=1)
    cfg = FedKMeansConfig(n_clients=3, k_global=3, c_rounds=2)
    audit = AuditLog()
    result = federated_kmeans(rows, cfg, np.random.default_rng(0), audit=audit)
    kinds = {r.kind for r in audit.records}
    assert kinds <= set(AUDIT_KINDS)
    assert len(audit.payloads("shard_size", INIT_ROUND)) == 3
    assert len(audit.payloads("centre", INIT_ROUND)) == 3
    assert len(audit.payloads("count")) == 3 * 2
    # no per-row values: every payload is at most k x d
    assert all(np.asarray(p).size <= 3 * 2 for p in audit.payloads())
    # the only raw rows that ever leave a client are the chosen initial centres
    leaked = {
        tuple(v)
        for p in audit.payloads()
        if p.ndim >= 1 and p.shape[-1] == rows.shape[1]
        for v in p.reshape(-1, rows.shape[1])
        if np.all(rows == v, axis=1).any()
    }
    assert leaked == {tuple(c) for c in result.initial.centres}
    rec = audit.to_records()[0]
    assert set(rec) == {"round", "client_id", "kind", "payload_digest"}


def test_k_above_rows_is_invalid() -> None:
    cfg = FedKMeansConfig(n_clients=1, k_global=5, c_rounds=1)
    with pytest.raises(InvalidParams):
        federated_kmeans(np.zeros((3, 2)), cfg, np.random.default_rng(0))


def test_unknown_init_strategy() -> None:
    cfg = FedKMeansConfig(n_clients=1, k_global=2, c_rounds=1)
    with pytest.raises(InvalidParams):
        federated_kmeans(np.arange(6.0).reshape(3, 2), cfg, np.random.default_rng(0), init="x")


# ---------- centralized ----------


def test_kmeanspp_rejects_large_k() -> None:
    with pytest.raises(InvalidParams):
        kmeanspp_init(np.zeros((2, 2)), 3, np.random.default_rng(0))


def test_centralized_kmeans_matches_sklearn_inertia() -> None:
    cluster = pytest.importorskip("sklearn.cluster")
    rows, truth = _blobs(seed=8)
    labels, centres, score = centralized_kmeans(rows, 3, np.random.default_rng(0))
    ref = cluster.KMeans(n_clusters=3, n_init=10, random_state=0).fit(rows)
    assert _same_partition(labels, truth)
    assert score == pytest.approx(ref.inertia_, rel=1e-6)
    assert centres.k == 3


# ---------- centroids.json ----------


def test_centroids_file_matches_schema(tmp_path: Path) -> None:
    pytest.importorskip("jsonschema")
    from jsonschema import Draft202012Validator

    rows, _ = _blobs(seed=3)
    cfg = FedKMeansConfig(n_clients=2, k_global=3, c_rounds=2)
    result = federated_kmeans(rows, cfg, np.random.default_rng(1))
    path = write_centroids(tmp_path / "centroids.json", result, cfg, seed=1)
    schema = json.loads((SCHEMAS_DIR / "centroids.schema.json").read_text(encoding="utf-8"))
    payload = json.loads(path.read_text(encoding="utf-8"))
    errors = list(Draft202012Validator(schema).iter_errors(payload))
    assert not errors, [e.message for e in errors]
    assert payload["k"] == 3 and len(payload["centres"]) == 3
