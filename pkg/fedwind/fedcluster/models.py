from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import DimensionMismatch, InvalidParams
from ..utils.io import sha256_bytes, write_lines

__all__ = [
    "ClientShard",
    "CentroidSet",
    "LocalUpdate",
    "FedKMeansResult",
    "AuditRecord",
    "AuditLog",
    "AUDIT_KINDS",
    "INIT_ROUND",
]

# Everything that may cross a client boundary, by kind.
AUDIT_KINDS = ("shard_size", "d2_total", "unchosen_count", "centre", "local_centroid", "count")
INIT_ROUND = -1


@dataclass(frozen=True)
class ClientShard:
    client_id: int
    row_indices: np.ndarray

    def __len__(self) -> int:
        return len(self.row_indices)


@dataclass(frozen=True)
class CentroidSet:
    centres: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.centres, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 1:
            raise InvalidParams(f"centres must be a non-empty k x d matrix, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidParams("centres must be finite")
        object.__setattr__(self, "centres", c)

    @property
    def k(self) -> int:
        return self.centres.shape[0]

    @property
    def d(self) -> int:
        return self.centres.shape[1]

    def to_dict(self) -> dict[str, Any]:
        return {"k": self.k, "d": self.d, "centres": self.centres.tolist()}


@dataclass(frozen=True)
class LocalUpdate:
    """One client's reply: local centroids and per-cluster sample counts.

    Rows of ``local_centroids`` whose count is 0 are absent and hold zeros.
    """

    client_id: int
    local_centroids: np.ndarray
    counts: np.ndarray

    @property
    def present(self) -> np.ndarray:
        return self.counts > 0

    @property
    def k(self) -> int:
        return self.local_centroids.shape[0]

    @property
    def d(self) -> int:
        return self.local_centroids.shape[1]


@dataclass(frozen=True)
class FedKMeansResult:
    labels: np.ndarray
    centroids: CentroidSet
    inertia: float
    initial: CentroidSet
    shards: list[ClientShard] = field(default_factory=list)

    @property
    def n_labels(self) -> int:
        return len(np.unique(self.labels))


@dataclass(frozen=True)
class AuditRecord:
    round: int
    client_id: int
    kind: str
    payload: np.ndarray

    @property
    def digest(self) -> str:
        blob = np.ascontiguousarray(self.payload, dtype=np.float64).tobytes()
        return sha256_bytes(blob)[:16]

    def to_dict(self) -> dict[str, Any]:
        return {
            "round": self.round,
            "client_id": self.client_id,
            "kind": self.kind,
            "payload_digest": self.digest,
        }


class AuditLog:
    """Every value that leaves a client, in the order it was sent."""

    def __init__(self) -> None:
        self.records: list[AuditRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def record(self, round_: int, client_id: int, kind: str, payload: Any) -> None:
        if kind not in AUDIT_KINDS:
            raise DimensionMismatch(f"unknown audit kind {kind!r}")
        arr = np.array(payload, dtype=np.float64, copy=True)
        self.records.append(AuditRecord(round_, int(client_id), kind, arr))

    def payloads(self, kind: str | None = None, round_: int | None = None) -> list[np.ndarray]:
        return [
            r.payload
            for r in self.records
            if (kind is None or r.kind == kind) and (round_ is None or r.round == round_)
        ]

    def to_records(self) -> list[dict[str, Any]]:
        return [r.to_dict() for r in self.records]

    def write(self, path: str | Path) -> Path:
        return write_lines(path, self.to_records())
