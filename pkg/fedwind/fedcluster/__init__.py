from __future__ import annotations

from .federated import (
    aggregate_centroids,
    drs_init,
    federated_kmeans,
    local_lloyd_step,
    partition_clients,
    write_centroids,
)
from .kmeans import (
    assign,
    centralized_kmeans,
    centralized_lloyd,
    inertia,
    kmeanspp_init,
    sq_distances,
)
from .models import AuditLog, AuditRecord, CentroidSet, ClientShard, FedKMeansResult, LocalUpdate

__all__ = [
    "AuditLog",
    "AuditRecord",
    "CentroidSet",
    "ClientShard",
    "FedKMeansResult",
    "LocalUpdate",
    "aggregate_centroids",
    "assign",
    "centralized_kmeans",
    "centralized_lloyd",
    "drs_init",
    "federated_kmeans",
    "inertia",
    "kmeanspp_init",
    "local_lloyd_step",
    "partition_clients",
    "sq_distances",
    "write_centroids",
]
