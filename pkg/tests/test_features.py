from __future__ import annotations

"""Tests for fedwind.features: fingerprint statistics, standardisation and
cluster profiles."""

from pathlib import Path

import numpy as np
import pytest

from fedwind.errors import SeriesTooShort, TooFewTurbines
from fedwind.features import (
    FEATURES,
    BehaviourFingerprint,
    cluster_profile,
    fingerprint,
    name_cluster_types,
    read_fingerprints,
    standardise,
    write_fingerprints,
)
from fedwind.features.fingerprint import fingerprint_values
from fedwind.features.scaling import Scaler


def test_fingerprint_uses_population_statistics(make_series) -> None:
    fp = fingerprint(make_series("A", [0.0, 10.0, 20.0, 10.0]))
    assert fp.mean_power == pytest.approx(10.0)
    assert fp.std_power == pytest.approx(np.sqrt(50.0))
    assert fp.cv == pytest.approx(np.sqrt(50.0) / 10.0)
    assert fp.zero_ratio == pytest.approx(0.25)
    assert fp.ramp_mean == pytest.approx(10.0 / 3.0)
    assert fp.ramp_std == pytest.approx(np.std([10.0, 10.0, -10.0]))


def test_all_zero_series_has_zero_cv() -> None:
    fp = fingerprint_values(np.zeros(24), 2000.0)
    assert fp.cv == 0.0
    assert fp.zero_ratio == 1.0


def test_cv_mean_guard_scales_with_capacity() -> None:
    p = np.array([0.0, 0.0, 0.0, 0.002])
    fp = fingerprint_values(p, 1000.0)
    # mean below 1e-6 x capacity: std is divided by the floor instead
    assert fp.cv == pytest.approx(p.std() / 1e-3)


def test_single_step_is_too_short() -> None:
    with pytest.raises(SeriesTooShort):
        fingerprint_values(np.array([1.0]), 2000.0)


def test_fingerprints_file_round_trip(tmp_path: Path) -> None:
    fps = [
        BehaviourFingerprint(1.0, 2.0, 2.0, 0.1, 0.0, 0.5),
        BehaviourFingerprint(3, 1, 0.3, 0, 0, 1),
    ]
    write_fingerprints(tmp_path / "fp.csv", ["a", "b"], fps)
    ids, back = read_fingerprints(tmp_path / "fp.csv")
    assert ids == ["a", "b"]
    np.testing.assert_allclose([f.to_array() for f in back], [f.to_array() for f in fps])


def test_standardise_gives_zero_mean_unit_std() -> None:
    rng = np.random.default_rng(0)
    raw = rng.normal(5.0, 3.0, size=(30, len(FEATURES)))
    m = standardise(raw)
    np.testing.assert_allclose(m.rows.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(m.rows.std(axis=0), 1.0)
    np.testing.assert_allclose(m.scaler.inverse_transform(m.rows), raw)


def test_constant_column_maps_to_zero() -> None:
    raw = np.tile(np.arange(1.0, 7.0), (5, 1))
    raw[:, 0] = [1, 2, 3, 4, 5]
    m = standardise(raw)
    assert m.scaler.degenerate.tolist() == [False, True, True, True, True, True]
    assert np.all(m.rows[:, 1:] == 0.0)


def test_zero_ratio_can_stay_raw() -> None:
    raw = np.random.default_rng(1).uniform(size=(10, len(FEATURES)))
    m = standardise(raw, standardise_zero_ratio=False)
    zr = FEATURES.index("zero_ratio")
    np.testing.assert_allclose(m.rows[:, zr], raw[:, zr])


def test_standardise_needs_two_turbines() -> None:
    with pytest.raises(TooFewTurbines):
        standardise(np.ones((1, len(FEATURES))))


def test_scaler_dict_round_trip_preserves_transform() -> None:
    raw = np.random.default_rng(2).normal(size=(8, len(FEATURES)))
    m = standardise(raw)
    again = Scaler.from_dict(m.scaler.to_dict())
    np.testing.assert_allclose(again.transform(raw), m.rows)


def test_subset_keeps_ids_and_scaler() -> None:
    m = standardise(np.random.default_rng(3).normal(size=(6, 6)), ids=list("abcdef"))
    sub = m.subset([4, 1])
    assert sub.ids == ["e", "b"]
    assert sub.scaler is m.scaler
    np.testing.assert_array_equal(sub.rows, m.rows[[4, 1]])


def test_cluster_profile_reports_raw_zero_ratio() -> None:
    rows = np.zeros((4, len(FEATURES)))
    rows[:, 0] = [1.0, 3.0, -1.0, -1.0]
    labels = np.array([0, 0, 1, 1])
    zero_ratios = np.array([0.0, 0.2, 0.95, 0.99])
    profile = cluster_profile(rows, labels, zero_ratios)
    c0, c1 = profile.by_cluster(0), profile.by_cluster(1)
    assert c0.count == 2 and profile.total == 4
    assert c0.feature("mean_power") == pytest.approx(2.0)
    assert c1.feature("zero_ratio") == pytest.approx(0.97)
    assert name_cluster_types(profile)[1] == "faulty_shutdown"


def test_profile_frame_layout() -> None:
    rows = np.zeros((3, len(FEATURES)))
    profile = cluster_profile(rows, np.array([0, 1, 1]), np.zeros(3))
    frame = profile.to_frame()
    assert list(frame.columns[:3]) == ["cluster", "count", "type"]
    assert "ramp_std_std" in frame.columns
    assert frame["count"].tolist() == [1, 2]
    assert frame["type"].tolist() == ["baseline_stable", "baseline_stable"]
