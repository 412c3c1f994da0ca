from __future__ import annotations

"""Property checks over many random instances: federated/centralized
equivalence, DRS sampling frequencies, exact aggregation, silhouette against
its definition, archetype recovery and the auto-split boundary rules. The last
section runs reduced fleets end to end and compares grouping methods and the
client filter on held-out forecasts."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from fedwind.autosplit import GridResult, auto_split, leaf_labels, silhouette
from fedwind.autosplit import tree as tree_mod
from fedwind.config import FedKMeansConfig, ParamGrid, RunConfig, SplitThresholds, TrainHyper
from fedwind.data import generate_synthetic_fleet
from fedwind.eval import R2_FLOOR, adjusted_rand_index
from fedwind.features import FeatureMatrix, fingerprint, standardise
from fedwind.fedcluster import (
    CentroidSet,
    aggregate_centroids,
    assign,
    centralized_kmeans,
    centralized_lloyd,
    drs_init,
    federated_kmeans,
    local_lloyd_step,
    partition_clients,
)
from fedwind.forecast import (
    evaluate_clients,
    evaluate_pooled,
    filter_uninformative_clients,
    make_client_dataset,
    train_cluster_fl,
)
from fedwind.pipeline import RunPaths, run_stage
from fedwind.utils.rng import derive


def test_one_client_reduces_to_centralized_lloyd() -> None:
    for i in range(100):
        rng = derive(2024, i)
        n = int(rng.integers(10, 201))
        k = int(rng.integers(1, 6))
        c = int(rng.integers(1, 6))
        rows = rng.normal(size=(n, 6))
        cfg = FedKMeansConfig(n_clients=1, k_global=k, c_rounds=c)
        fed = federated_kmeans(rows, cfg, rng, init="kmeanspp")
        labels, centres = centralized_lloyd(rows, fed.initial, c)
        np.testing.assert_array_equal(fed.labels, labels)
        np.testing.assert_allclose(fed.centroids.centres, centres.centres, atol=1e-12)


def test_drs_matches_d2_probabilities_in_total_variation() -> None:
    rows = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 3.0], [-2.0, 1.0]])
    n = len(rows)
    d2 = ((rows[:, None, :] - rows[None, :, :]) ** 2).sum(axis=2)
    # first centre uniform, later ones proportional to the min squared distance
    exact_second = np.zeros(n)
    exact_third = np.zeros(n)
    for a in range(n):
        p_second = d2[a] / d2[a].sum()
        exact_second += p_second / n
        for b in range(n):
            if p_second[b] == 0:
                continue
            nearest = np.minimum(d2[a], d2[b])
            exact_third += p_second[b] / n * nearest / nearest.sum()

    trials = 10_000
    second = np.zeros(n)
    third = np.zeros(n)
    for t in range(trials):
        rng = derive(99, t)
        shards = partition_clients(rows, 2, rng)
        centres = drs_init(shards, rows, 3, rng).centres
        second[np.flatnonzero(np.all(rows == centres[1], axis=1))[0]] += 1
        third[np.flatnonzero(np.all(rows == centres[2], axis=1))[0]] += 1
    assert 0.5 * np.abs(second / trials - exact_second).sum() <= 0.02
    assert 0.5 * np.abs(third / trials - exact_third).sum() <= 0.02


def test_aggregation_equals_pooled_means() -> None:
    for i in range(40):
        rng = derive(7, i)
        n = int(rng.integers(12, 120))
        d = int(rng.integers(1, 7))
        k = int(rng.integers(1, 6))
        n_clients = int(rng.integers(1, 6))
        rows = rng.normal(size=(n, d)) * rng.uniform(0.1, 10.0)
        previous = CentroidSet(rows[rng.choice(n, size=k, replace=False)].copy())
        shards = partition_clients(rows, n_clients, rng)
        updates = [local_lloyd_step(s, rows, previous) for s in shards]
        merged = aggregate_centroids(updates, previous)
        labels = assign(rows, previous.centres)
        for j in range(k):
            members = rows[labels == j]
            expected = members.mean(axis=0) if len(members) else previous.centres[j]
            assert np.max(np.abs(merged.centres[j] - expected)) <= 1e-12


def _direct_silhouette(rows: np.ndarray, labels: np.ndarray) -> float:
    dist = np.sqrt(((rows[:, None, :] - rows[None, :, :]) ** 2).sum(axis=2))
    scores = []
    for i in range(len(rows)):
        same = (labels == labels[i]) & (np.arange(len(rows)) != i)
        if not same.any():
            scores.append(0.0)
            continue
        a = dist[i, same].mean()
        b = min(dist[i, labels == other].mean() for other in set(labels.tolist()) - {labels[i]})
        scores.append((b - a) / max(a, b) if max(a, b) > 0 else 0.0)
    return float(np.mean(scores))


def test_silhouette_equals_its_definition() -> None:
    for i in range(50):
        rng = derive(31, i)
        n = int(rng.integers(3, 201))
        k = int(rng.integers(2, min(n, 6) + 1))
        rows = rng.normal(size=(n, int(rng.integers(1, 7))))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        assert abs(silhouette(rows, labels) - _direct_silhouette(rows, labels)) <= 1e-9


def _standardised_fleet(
    archetypes: list, seed: int
) -> tuple[FeatureMatrix, np.ndarray, np.ndarray]:
    fleet = generate_synthetic_fleet(archetypes, 8760, seed)
    names = np.array(fleet.archetypes)
    truth = np.unique(names, return_inverse=True)[1]
    return standardise([fingerprint(t) for t in fleet]), truth, names


@pytest.mark.parametrize("seed", range(3))
def test_three_archetypes_separate_under_centralized_kmeans(seed: int) -> None:
    archetypes = [
        ("high_variability", 30, None),
        ("faulty", 30, None),
        ("baseline_stable", 30, None),
    ]
    matrix, truth, _ = _standardised_fleet(archetypes, seed)
    labels, _, _ = centralized_kmeans(matrix, 3, np.random.default_rng(seed))
    assert silhouette(matrix, labels) > 0.45
    assert adjusted_rand_index(labels, truth) >= 0.9


@pytest.mark.parametrize("seed", range(5))
def test_auto_split_recovers_generated_archetypes(seed: int) -> None:
    archetypes = [
        ("high_variability", 36, None),
        ("baseline_stable", 36, None),
        ("faulty", 48, {"shutdown_prob": 1.0}),
    ]
    matrix, truth, names = _standardised_fleet(archetypes, seed)
    grid = ParamGrid(n_range=(3, 5), k_range=(3, 3), c_range=(3, 6))
    tree = auto_split(matrix, grid, SplitThresholds(), np.random.default_rng(100 + seed))
    labels, outlier = leaf_labels(tree)
    assert adjusted_rand_index(labels, truth) >= 0.9
    # 36 of 120 is exactly tau_min: both running groups end as outlier leaves
    assert outlier[names != "faulty"].all()
    # the offline group is searched but has nothing left to split
    assert not outlier[names == "faulty"].any()
    assert len(set(labels[names == "faulty"].tolist())) == 1


def _scripted_search(script: dict[int, tuple[list[int], float]], seen: list[int]):
    def fake(rows: np.ndarray, grid: ParamGrid, rng: np.random.Generator, **kwargs) -> GridResult:
        seen.append(len(rows))
        sizes, score = script[len(rows)]
        labels = np.repeat(np.arange(len(sizes)), sizes)
        return GridResult(score=score, labels=labels, params=(2, len(sizes), 2), evaluated=1)

    return fake


def test_size_at_tau_min_is_leafed_without_search(monkeypatch: pytest.MonkeyPatch) -> None:
    seen: list[int] = []
    script = {10: ([7, 3], 0.9), 7: ([4, 3], 0.1)}
    monkeypatch.setattr(tree_mod, "grid_search", _scripted_search(script, seen))
    tree = auto_split(np.zeros((10, 2)), ParamGrid(), SplitThresholds(), np.random.default_rng(0))
    # 3 of 10 is exactly tau_min: outlier leaf, never searched
    assert seen == [10, 7]
    small = [n for n in tree.nodes.values() if n.size == 3]
    assert small and all(n.is_outlier_leaf for n in small)
    # 7 of 10 is exactly tau_large: not oversized, so a low silhouette leaves it whole
    seven = next(n for n in tree.nodes.values() if n.size == 7)
    assert seven.is_leaf and not seven.forced
    assert tree.n_forced == 0


def test_oversized_nodes_are_forced_once_each(monkeypatch: pytest.MonkeyPatch) -> None:
    seen: list[int] = []
    script = {
        20: ([18, 2], 0.1),
        18: ([10, 8], 0.1),
        10: ([5, 5], 0.1),
        8: ([4, 4], 0.1),
    }
    monkeypatch.setattr(tree_mod, "grid_search", _scripted_search(script, seen))
    tree = auto_split(np.zeros((20, 2)), ParamGrid(), SplitThresholds(), np.random.default_rng(0))
    # the root and its 90% child both exceed tau_large, each splits once
    assert seen == [20, 18, 10, 8]
    eighteen = next(n for n in tree.nodes.values() if n.size == 18)
    assert tree.nodes[0].forced and eighteen.forced
    assert tree.n_forced == 2
    assert sorted(n.size for n in tree.nodes.values() if n.parent == eighteen.node_id) == [8, 10]
    # 50% and 40% are neither oversized nor well separated
    assert all(n.is_leaf and not n.forced for n in tree.nodes.values() if n.size in (10, 8))
    two = next(n for n in tree.nodes.values() if n.size == 2)
    assert two.is_outlier_leaf


# ---------- forecasting outcomes on reduced fleets ----------

FLEET_40 = [
    {"archetype": "baseline_stable", "count": 12},
    {"archetype": "high_variability", "count": 8},
    {"archetype": "faulty", "count": 4},
    {"archetype": "ramp_dominated", "count": 4},
    {"archetype": "mid_risk_low_output", "count": 4},
    {"archetype": "promising_volatile", "count": 4},
    {"archetype": "mildly_unstable", "count": 4},
]


def _grouping_test_mse(out_dir: Path, seed: int) -> dict[str, float]:
    cfg = RunConfig.model_validate(
        {
            "data": {"synthetic": {"archetypes": FLEET_40, "n_steps": 1500}},
            "method": "drs_auto",
            "baselines": ["kpp_auto", "geo_fixed"],
            "seed": seed,
            "out_dir": str(out_dir),
            "grid": {"n_range": [3, 5], "k_range": [3, 6], "c_range": [3, 5]},
            "hyper": {"hidden_dim": 16, "rounds": 10, "batch_size": 64, "learning_rate": 0.005},
            "forecast": {"lookback": 12, "horizon": 3, "rolling_horizon": 12},
        }
    )
    run_stage("generate", cfg)
    run_stage("features", cfg)
    clusters = run_stage("cluster", cfg)
    # geo grouping gets as many groups as the behaviour tree found
    cfg = cfg.model_copy(update={"geo_k": clusters["drs_auto"]["k"]})
    assert run_stage("cluster", cfg)["geo_fixed"]["k"] == clusters["drs_auto"]["k"]
    run_stage("train", cfg)
    paths = RunPaths.of(cfg)
    out = {}
    for method in cfg.methods():
        frame = pd.read_csv(paths.pooled_metrics(method), dtype={"group": str})
        row = frame[(frame["group"] == "all") & (frame["split"] == "test")]
        out[method] = float(row["mse"].iloc[0])
    return out


@pytest.fixture(scope="module")
def grouping_mse(tmp_path_factory: pytest.TempPathFactory) -> dict[str, float]:
    runs = [_grouping_test_mse(tmp_path_factory.mktemp(f"fleet{s}"), s) for s in range(3)]
    return {m: float(np.mean([r[m] for r in runs])) for m in runs[0]}


def test_behaviour_grouping_beats_geographic_grouping(grouping_mse: dict[str, float]) -> None:
    assert grouping_mse["drs_auto"] < grouping_mse["geo_fixed"]


def test_drs_and_kmeanspp_trees_forecast_alike(grouping_mse: dict[str, float]) -> None:
    drs, kpp = grouping_mse["drs_auto"], grouping_mse["kpp_auto"]
    assert abs(drs - kpp) / min(drs, kpp) < 0.15


def test_filtering_near_off_clients_stabilises_r2() -> None:
    productive = {"derate": 1.0, "wind_mean": 8.5, "ramp_noise": 0.01}
    fleet = generate_synthetic_fleet(
        [
            ("baseline_stable", 7, productive),
            ("faulty", 2, None),
            ("faulty", 1, {"shutdown_prob": 1.0}),
        ],
        1500,
        17,
    )
    clients = [make_client_dataset(t, lookback=6, horizon=3) for t in fleet]
    hyper = TrainHyper(hidden_dim=8, rounds=10, batch_size=32, learning_rate=0.01)

    kept, dropped = filter_uninformative_clients(clients)
    assert [c.turbine_id for c, _ in dropped] == [t.id for t in fleet][7:]
    assert {reason for _, reason in dropped} <= {"all_zero", "low_max", "low_std"}

    before, _ = train_cluster_fl(clients, hyper, np.random.default_rng(0))
    per_client = dict(evaluate_clients(before, clients, "test"))
    offline = per_client[fleet[9].id]
    assert offline.degenerate and offline.r2 == R2_FLOOR
    r2_before = float(np.mean([m.r2 for m in per_client.values()]))

    after, _ = train_cluster_fl(kept, hyper, np.random.default_rng(0))
    report = evaluate_pooled(after, kept, "test")
    assert report is not None
    assert report.r2 > 0
    assert r2_before < report.r2
