from __future__ import annotations

"""Tests for fedwind.eval: regression metrics (including the degenerate R^2
rule), ARI against a brute-force pair count, PCA, baseline groupings and the
report writer."""

from itertools import combinations
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from fedwind.data import TurbineMeta
from fedwind.errors import DimsTooLarge, EmptyInput, InvalidParams, LengthMismatch
from fedwind.eval import (
    R2_FLOOR,
    MethodSummary,
    adjusted_rand_index,
    comparison_frame,
    emit_report,
    flat_fed_kmeans_grouping,
    geo_grouping,
    grouping_from_labels,
    pca_frame,
    pca_project,
    regression_metrics,
)

# ---------- metrics ----------


def test_regression_metrics_values() -> None:
    m = regression_metrics(np.array([0.0, 1.0, 2.0, 3.0]), np.array([0.0, 1.0, 2.0, 5.0]))
    assert m.mse == pytest.approx(1.0)
    assert m.rmse == pytest.approx(1.0)
    assert m.mae == pytest.approx(0.5)
    assert m.r2 == pytest.approx(1.0 - 4.0 / 5.0)
    assert m.n_points == 4 and not m.degenerate


def test_r2_on_constant_truth() -> None:
    exact = regression_metrics(np.full(5, 0.3), np.full(5, 0.3))
    assert exact.r2 == 1.0 and not exact.degenerate
    off = regression_metrics(np.full(5, 0.3), np.full(5, 0.4))
    assert off.r2 == R2_FLOOR and off.degenerate


def test_regression_metrics_errors() -> None:
    with pytest.raises(LengthMismatch):
        regression_metrics(np.zeros(3), np.zeros(4))
    with pytest.raises(EmptyInput):
        regression_metrics(np.zeros(0), np.zeros(0))


def test_regression_metrics_matches_sklearn() -> None:
    skm = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(0)
    y, p = rng.normal(size=50), rng.normal(size=50)
    m = regression_metrics(y, p)
    assert m.mse == pytest.approx(skm.mean_squared_error(y, p))
    assert m.mae == pytest.approx(skm.mean_absolute_error(y, p))
    assert m.r2 == pytest.approx(skm.r2_score(y, p))


# ---------- ARI ----------


def _brute_ari(a: np.ndarray, b: np.ndarray) -> float:
    n = len(a)
    agree_both = sum(1 for i, j in combinations(range(n), 2) if a[i] == a[j] and b[i] == b[j])
    same_a = sum(1 for i, j in combinations(range(n), 2) if a[i] == a[j])
    same_b = sum(1 for i, j in combinations(range(n), 2) if b[i] == b[j])
    total = n * (n - 1) / 2
    expected = same_a * same_b / total
    maximum = (same_a + same_b) / 2
    return (agree_both - expected) / (maximum - expected)


def test_ari_matches_pair_counting() -> None:
    rng = np.random.default_rng(1)
    a, b = rng.integers(0, 3, size=30), rng.integers(0, 4, size=30)
    assert adjusted_rand_index(a, b) == pytest.approx(_brute_ari(a, b))


def test_ari_is_label_permutation_invariant() -> None:
    a = np.array([0, 0, 1, 1, 2, 2])
    assert adjusted_rand_index(a, np.array([5, 5, 3, 3, 9, 9])) == pytest.approx(1.0)


def test_ari_trivial_cases() -> None:
    assert adjusted_rand_index(np.zeros(5), np.zeros(5)) == 1.0
    assert adjusted_rand_index(np.array([1]), np.array([2])) == 1.0
    with pytest.raises(LengthMismatch):
        adjusted_rand_index(np.zeros(3), np.zeros(2))


def test_ari_matches_sklearn() -> None:
    skm = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(2)
    a, b = rng.integers(0, 5, size=80), rng.integers(0, 3, size=80)
    assert adjusted_rand_index(a, b) == pytest.approx(skm.adjusted_rand_score(a, b))


# ---------- PCA ----------


def test_pca_orders_components_and_ratios() -> None:
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, 4)) * np.array([5.0, 2.0, 1.0, 0.1])
    proj = pca_project(x, dims=3)
    assert proj.rows.shape == (200, 3)
    assert np.all(np.diff(proj.explained_variance_ratio) <= 0)
    assert proj.explained_variance_ratio.sum() <= 1.0 + 1e-12
    np.testing.assert_allclose(proj.components @ proj.components.T, np.eye(3), atol=1e-10)
    for comp in proj.components:
        assert comp[np.argmax(np.abs(comp))] > 0
    np.testing.assert_allclose(proj.rows.var(axis=0), proj.eigenvalues[:3])


def test_pca_matches_sklearn_variance_ratio() -> None:
    decomposition = pytest.importorskip("sklearn.decomposition")
    x = np.random.default_rng(3).normal(size=(60, 5)) @ np.random.default_rng(4).normal(size=(5, 5))
    ours = pca_project(x, dims=3).explained_variance_ratio
    ref = decomposition.PCA(n_components=3).fit(x).explained_variance_ratio_
    np.testing.assert_allclose(ours, ref, rtol=1e-8)


def test_pca_dims_bounds() -> None:
    with pytest.raises(DimsTooLarge):
        pca_project(np.zeros((5, 2)), dims=3)
    with pytest.raises(InvalidParams):
        pca_project(np.zeros((5, 2)), dims=0)


def test_pca_of_constant_rows_has_zero_ratios() -> None:
    proj = pca_project(np.ones((4, 3)), dims=2)
    assert proj.explained_variance_ratio.tolist() == [0.0, 0.0]


def test_pca_frame_columns() -> None:
    frame = pca_frame(np.zeros((2, 3)), ["a", "b"], np.array([1, 0]))
    assert list(frame.columns) == ["id", "pc1", "pc2", "pc3", "cluster"]


# ---------- groupings ----------


def _meta(i: int, x: float, y: float) -> TurbineMeta:
    return TurbineMeta(id=f"T{i}", capacity_kw=2000.0, age=1.0, utm_x=x, utm_y=y)


def test_geo_grouping_auto_finds_spatial_groups() -> None:
    rng = np.random.default_rng(0)
    sites = [(0, 0), (10_000, 0), (0, 10_000)]
    metas = [
        _meta(10 * s + i, sx + rng.normal(0, 50), sy + rng.normal(0, 50))
        for s, (sx, sy) in enumerate(sites)
        for i in range(10)
    ]
    res = geo_grouping(metas, None, np.random.default_rng(1), k_range=(2, 6))
    assert res.method == "geo_auto"
    assert res.k == 3
    assert sorted(res.sweep) == [2, 3, 4, 5, 6]
    assert adjusted_rand_index(res.labels, np.repeat([0, 1, 2], 10)) == pytest.approx(1.0)


def test_geo_grouping_fixed_k_and_identical_positions() -> None:
    metas = [_meta(i, float(i), 0.0) for i in range(8)]
    fixed = geo_grouping(metas, 2, np.random.default_rng(0))
    assert fixed.method == "geo_fixed" and fixed.k == 2
    same = geo_grouping([_meta(i, 5.0, 5.0) for i in range(4)], None, np.random.default_rng(0))
    assert same.k == 1 and same.labels.tolist() == [0, 0, 0, 0]


def test_flat_grouping_relabels_densely() -> None:
    rng = np.random.default_rng(0)
    rows = np.concatenate([rng.normal(c, 0.5, size=(10, 2)) for c in (0.0, 20.0, 40.0)])
    res = flat_fed_kmeans_grouping(rows, k=3, rng=np.random.default_rng(2))
    assert sorted(np.unique(res.labels).tolist()) == list(range(res.k))
    assert res.fed_result is not None
    assert res.to_dict()["sizes"] == np.bincount(res.labels).tolist()


def test_grouping_from_labels_is_dense() -> None:
    res = grouping_from_labels("x", np.array([7, 7, 3, 3]), np.array([[0.0], [0.1], [5.0], [5.1]]))
    assert res.labels.tolist() == [1, 1, 0, 0]
    assert res.k == 2 and res.quality > 0.9


# ---------- report ----------


def _summary(method: str, with_forecast: bool) -> MethodSummary:
    grouping = grouping_from_labels(method, np.array([0, 0, 1]), np.array([[0.0], [0.1], [3.0]]))
    pooled = {
        "train": regression_metrics(np.array([0.1, 0.5]), np.array([0.2, 0.4])),
        "test": regression_metrics(np.array([0.3, 0.6]), np.array([0.3, 0.5])),
    }
    per = pd.DataFrame(
        [{"id": "T1", "group": 0, "split": "test", "mse": 0.1, "rmse": 0.3, "mae": 0.2, "r2": 0.5}]
    )
    forecasts = None
    histories = {}
    if with_forecast:
        forecasts = pd.DataFrame(
            {
                "id": "T1",
                "timestamp": [f"2023-01-01T{h:02d}:00:00" for h in range(4)],
                "measured_kw": [1.0, 2.0, 3.0, 4.0],
                "predicted_kw": [1.5, 2.0, 2.5, 4.0],
                "mode": "teacher_forced",
            }
        )
        histories = {
            0: pd.DataFrame(
                {"round": [1, 1, 2, 2], "split": ["train", "validation"] * 2, "mse": [3, 4, 2, 3]}
            )
        }
    return MethodSummary(
        method=method,
        grouping=grouping,
        pooled=pooled,
        per_turbine=per,
        pca=pca_frame(np.zeros((3, 2)), ["T0", "T1", "T2"], grouping.labels),
        histories=histories,
        forecasts=forecasts,
    )


def test_comparison_frame_has_train_and_test_rows() -> None:
    frame = comparison_frame([_summary("drs_auto", False), _summary("geo_fixed", False)])
    assert frame[["method", "split"]].values.tolist() == [
        ["drs_auto", "train"],
        ["drs_auto", "test"],
        ["geo_fixed", "train"],
        ["geo_fixed", "test"],
    ]
    assert frame["n_groups"].tolist() == [2, 2, 2, 2]


def test_emit_report_writes_tables_and_plots(tmp_path: Path) -> None:
    written = emit_report([_summary("drs_auto", True), _summary("geo_fixed", False)], tmp_path)
    names = {p.resolve().relative_to(tmp_path.resolve()).as_posix() for p in written}
    assert "comparison.csv" in names
    assert "comparison_per_turbine.csv" in names
    assert "drs_auto/pca.csv" in names
    assert "drs_auto/plots/forecast_T1.svg" in names
    assert "drs_auto/plots/history_cluster_0.svg" in names
    assert not (tmp_path / "geo_fixed" / "plots").exists()
    per = pd.read_csv(tmp_path / "comparison_per_turbine.csv")
    assert list(per.columns) == ["method", "id", "group", "split", "mse", "rmse", "mae", "r2"]


def test_emit_report_is_byte_stable(tmp_path: Path) -> None:
    emit_report([_summary("drs_auto", True)], tmp_path / "a")
    emit_report([_summary("drs_auto", True)], tmp_path / "b")
    for rel in ("comparison.csv", "drs_auto/plots/forecast_T1.svg"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
