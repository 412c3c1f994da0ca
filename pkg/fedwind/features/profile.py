from __future__ import annotations

"""Cluster profiles: counts and per-feature mean / std per cluster.

Features are reported in standardized space except zero_ratio, which is
reported as the raw fraction of zero-output steps.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import LengthMismatch
from .fingerprint import FEATURES, ZERO_RATIO
from .scaling import FeatureMatrix

__all__ = [
    "ClusterStats",
    "ClusterProfile",
    "cluster_profile",
    "name_cluster_types",
    "CLUSTER_TYPES",
]

CLUSTER_TYPES: tuple[str, ...] = (
    "faulty_shutdown",
    "ramp_dominated",
    "high_power_high_variability",
    "mid_risk_low_output",
    "promising_volatile",
    "mildly_unstable",
    "baseline_stable",
)


@dataclass(frozen=True)
class ClusterStats:
    cluster: int
    count: int
    mean: np.ndarray
    std: np.ndarray

    def feature(self, name: str) -> float:
        return float(self.mean[FEATURES.index(name)])


@dataclass(frozen=True)
class ClusterProfile:
    clusters: list[ClusterStats]

    @property
    def total(self) -> int:
        return sum(c.count for c in self.clusters)

    def by_cluster(self, cluster: int) -> ClusterStats:
        for c in self.clusters:
            if c.cluster == cluster:
                return c
        raise KeyError(cluster)

    def to_frame(self, types: dict[int, str] | None = None) -> pd.DataFrame:
        types = types if types is not None else name_cluster_types(self)
        records = []
        for c in self.clusters:
            rec: dict[str, object] = {
                "cluster": c.cluster,
                "count": c.count,
                "type": types.get(c.cluster, ""),
            }
            for i, name in enumerate(FEATURES):
                rec[f"{name}_mean"] = float(c.mean[i])
            for i, name in enumerate(FEATURES):
                rec[f"{name}_std"] = float(c.std[i])
            records.append(rec)
        columns = ["cluster", "count", "type"]
        columns += [f"{n}_mean" for n in FEATURES] + [f"{n}_std" for n in FEATURES]
        return pd.DataFrame(records, columns=columns)


def cluster_profile(
    matrix: FeatureMatrix | np.ndarray,
    labels: np.ndarray,
    zero_ratios: np.ndarray,
) -> ClusterProfile:
    if isinstance(matrix, FeatureMatrix):
        rows = matrix.rows
    else:
        rows = np.asarray(matrix, dtype=np.float64)
    labels = np.asarray(labels)
    zero_ratios = np.asarray(zero_ratios, dtype=np.float64)
    if len(labels) != len(rows) or len(zero_ratios) != len(rows):
        raise LengthMismatch("labels and zero_ratios need one entry per row")

    clusters = []
    for label in np.unique(labels):
        mask = labels == label
        part = rows[mask].copy()
        part[:, ZERO_RATIO] = zero_ratios[mask]
        clusters.append(
            ClusterStats(
                cluster=int(label),
                count=int(mask.sum()),
                mean=part.mean(axis=0),
                std=part.std(axis=0),
            )
        )
    return ClusterProfile(clusters)


def _type_of(c: ClusterStats) -> str:
    mean_power = c.feature("mean_power")
    zero_ratio = c.feature("zero_ratio")
    ramp_mean = c.feature("ramp_mean")
    if zero_ratio >= 0.9:
        return "faulty_shutdown"
    if ramp_mean >= 2.0:
        return "ramp_dominated"
    if mean_power >= 1.5:
        return "high_power_high_variability"
    if zero_ratio >= 0.25 and mean_power < 0:
        return "mid_risk_low_output"
    if mean_power > 0.25:
        return "promising_volatile"
    if mean_power < 0 and ramp_mean >= 0.5:
        return "mildly_unstable"
    return "baseline_stable"


def name_cluster_types(profile: ClusterProfile) -> dict[int, str]:
    """Behaviour type per cluster from rule thresholds on the profile means.

    Rules apply in order; the first match wins:
      raw zero_ratio >= 0.9                      -> faulty_shutdown
      ramp_mean >= 2                              -> ramp_dominated
      mean_power >= 1.5                           -> high_power_high_variability
      zero_ratio >= 0.25 and mean_power < 0       -> mid_risk_low_output
      mean_power > 0.25                           -> promising_volatile
      mean_power < 0 and ramp_mean >= 0.5         -> mildly_unstable
      otherwise                                   -> baseline_stable
    """
    return {c.cluster: _type_of(c) for c in profile.clusters}
