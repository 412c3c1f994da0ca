from __future__ import annotations

from .fingerprint import (
    FEATURES,
    BehaviourFingerprint,
    fingerprint,
    fingerprint_values,
    read_fingerprints,
    write_fingerprints,
)
from .profile import (
    CLUSTER_TYPES,
    ClusterProfile,
    ClusterStats,
    cluster_profile,
    name_cluster_types,
)
from .scaling import FeatureMatrix, Scaler, standardise

__all__ = [
    "BehaviourFingerprint",
    "CLUSTER_TYPES",
    "ClusterProfile",
    "ClusterStats",
    "FEATURES",
    "FeatureMatrix",
    "Scaler",
    "cluster_profile",
    "fingerprint",
    "fingerprint_values",
    "name_cluster_types",
    "read_fingerprints",
    "standardise",
    "write_fingerprints",
]
