from __future__ import annotations

"""Baseline turbine groupings: geographic k-means and flat federated k-means."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..autosplit.silhouette import silhouette
from ..config import FedKMeansConfig
from ..data.models import TurbineMeta
from ..errors import InvalidParams
from ..features.scaling import FeatureMatrix
from ..fedcluster.federated import federated_kmeans
from ..fedcluster.kmeans import as_rows, centralized_kmeans
from ..fedcluster.models import AuditLog, FedKMeansResult
from ..utils.rng import derive, draw_base

log = logging.getLogger(__name__)

__all__ = [
    "GroupingResult",
    "dense_labels",
    "grouping_from_labels",
    "geo_grouping",
    "flat_fed_kmeans_grouping",
]


@dataclass(frozen=True)
class GroupingResult:
    method: str
    labels: np.ndarray
    k: int
    quality: float
    outlier: np.ndarray | None = None
    sweep: dict[int, float] = field(default_factory=dict)
    fed_result: FedKMeansResult | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "k": self.k,
            "quality": self.quality,
            "sizes": np.bincount(self.labels, minlength=self.k).tolist(),
            "sweep": {str(k): v for k, v in sorted(self.sweep.items())},
        }


def dense_labels(labels: np.ndarray) -> np.ndarray:
    _, inv = np.unique(np.asarray(labels), return_inverse=True)
    return inv.astype(np.int64)


def _quality(rows: np.ndarray, labels: np.ndarray) -> float:
    return silhouette(rows, labels) if len(np.unique(labels)) >= 2 else 0.0


def grouping_from_labels(
    method: str,
    labels: np.ndarray,
    matrix: FeatureMatrix | np.ndarray,
    *,
    outlier: np.ndarray | None = None,
) -> GroupingResult:
    dense = dense_labels(labels)
    return GroupingResult(
        method=method,
        labels=dense,
        k=int(dense.max(initial=-1)) + 1,
        quality=_quality(as_rows(matrix), dense),
        outlier=outlier,
    )


def _standardised_coords(metas: Sequence[TurbineMeta]) -> np.ndarray:
    xy = np.array([[m.utm_x, m.utm_y] for m in metas], dtype=np.float64).reshape(-1, 2)
    std = xy.std(axis=0)
    std[std == 0] = 1.0
    return (xy - xy.mean(axis=0)) / std


def geo_grouping(
    metas: Sequence[TurbineMeta],
    k: int | None,
    rng: np.random.Generator,
    *,
    k_range: tuple[int, int] = (2, 10),
    n_init: int = 10,
    method: str | None = None,
) -> GroupingResult:
    """Centralized k-means on standardized UTM coordinates.

    With ``k=None`` every K in ``k_range`` (capped below the fleet size) is
    tried and the best silhouette wins, ties going to the smaller K. A fleet
    whose turbines all share one position is a single group.
    """
    name = method or ("geo_auto" if k is None else "geo_fixed")
    if not metas:
        raise InvalidParams("geo_grouping needs at least one turbine")
    xy = _standardised_coords(metas)
    n = len(xy)
    if np.all(xy == xy[0]):
        log.info("%s: all turbines share one location, single group", name)
        return GroupingResult(name, np.zeros(n, dtype=np.int64), 1, 0.0)

    base = draw_base(rng)
    if k is not None:
        if k > n:
            log.warning("%s: k=%d exceeds %d turbines, using k=%d", name, k, n, n)
            k = n
        labels, _, _ = centralized_kmeans(xy, k, derive(base, k), n_init=n_init)
        return grouping_from_labels(name, labels, xy)

    lo, hi = k_range
    sweep: dict[int, float] = {}
    best: tuple[float, int, np.ndarray] | None = None
    for cand in range(lo, min(hi, n - 1) + 1):
        labels, _, _ = centralized_kmeans(xy, cand, derive(base, cand), n_init=n_init)
        if len(np.unique(labels)) < 2:
            continue
        score = silhouette(xy, labels)
        sweep[cand] = score
        log.debug("%s: K=%d silhouette %.4f", name, cand, score)
        if best is None or score > best[0]:
            best = (score, cand, labels)
    if best is None:
        return GroupingResult(name, np.zeros(n, dtype=np.int64), 1, 0.0)
    log.info("%s: chose K=%d (silhouette %.4f)", name, best[1], best[0])
    dense = dense_labels(best[2])
    return GroupingResult(name, dense, int(dense.max()) + 1, best[0], sweep=sweep)


def flat_fed_kmeans_grouping(
    matrix: FeatureMatrix | np.ndarray,
    k: int = 6,
    config: FedKMeansConfig | None = None,
    *,
    rng: np.random.Generator,
    audit: AuditLog | None = None,
    max_workers: int = 1,
    method: str = "flat_fed_k",
) -> GroupingResult:
    """One federated k-means run with DRS seeding and no recursive splitting."""
    rows = as_rows(matrix)
    if k > len(rows):
        log.warning("%s: k=%d exceeds %d turbines, using k=%d", method, k, len(rows), len(rows))
        k = len(rows)
    cfg = config or FedKMeansConfig(n_clients=5, k_global=k, c_rounds=5)
    cfg = cfg.model_copy(update={"k_global": k, "n_clients": min(cfg.n_clients, len(rows))})
    result = federated_kmeans(rows, cfg, rng, init="drs", audit=audit, max_workers=max_workers)
    dense = dense_labels(result.labels)
    log.info("%s: %d groups from k=%d", method, int(dense.max()) + 1, k)
    return GroupingResult(
        method=method,
        labels=dense,
        k=int(dense.max()) + 1,
        quality=_quality(rows, dense),
        fed_result=result,
    )
