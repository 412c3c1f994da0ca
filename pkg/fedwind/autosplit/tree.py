from __future__ import annotations

"""Auto-split: breadth-first recursive partitioning of behaviour space.

Each queued node runs a grid search of federated k-means configurations and
keeps the labelling with the best silhouette. A node splits when that score
reaches ``tau_sil``, or is forced when the node itself holds more than
``tau_large`` of all rows. The forced path fires at most once per node and
children of a forced split are judged by the same rules as any other node.
Nodes holding at most ``tau_min`` of all rows become outlier leaves and are
never searched.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from ..config import FedKMeansConfig, ParamGrid, SplitThresholds
from ..features.scaling import FeatureMatrix
from ..fedcluster.federated import federated_kmeans
from ..fedcluster.kmeans import as_rows
from ..fedcluster.models import AuditLog
from ..utils.pool import ordered_map
from ..utils.rng import derive, draw_base
from .silhouette import silhouette

log = logging.getLogger(__name__)

__all__ = ["GridResult", "ClusterNode", "ClusterTree", "grid_search", "auto_split", "leaf_labels"]

# ratio comparisons tolerate float rounding at the threshold boundaries
_RATIO_EPS = 1e-12

InitStrategy = Literal["drs", "kmeanspp"]


@dataclass(frozen=True)
class GridResult:
    score: float
    labels: np.ndarray
    params: tuple[int, int, int]
    evaluated: int
    audit: AuditLog | None = None


def _effective_configs(grid: ParamGrid, size: int) -> list[tuple[int, int, int]]:
    capped = {(min(n, size), min(k, size), c) for n, k, c in grid.configurations()}
    return sorted(capped)


def grid_search(
    matrix_sub: FeatureMatrix | np.ndarray,
    grid: ParamGrid,
    rng: np.random.Generator,
    *,
    init: InitStrategy = "drs",
    max_workers: int = 1,
    audit: bool = False,
) -> GridResult | None:
    """Best-silhouette federated k-means labelling over the (n, k, c) grid.

    n and k are capped at the node size and duplicates evaluated once. Each
    configuration draws from its own stream derived from ``rng``. Labellings
    with a single distinct label are skipped; equal scores keep the
    lexicographically smallest configuration. Returns None when nothing
    produced two or more labels. With ``audit=True`` the result carries the
    audit log of the winning run.
    """
    rows = as_rows(matrix_sub)
    if len(rows) < 2:
        return None
    base = draw_base(rng)
    configs = _effective_configs(grid, len(rows))

    def run(cfg: tuple[int, int, int]) -> tuple[float, np.ndarray, AuditLog | None] | None:
        n, k, c = cfg
        log_ = AuditLog() if audit else None
        result = federated_kmeans(
            rows,
            FedKMeansConfig(n_clients=n, k_global=k, c_rounds=c),
            derive(base, n, k, c),
            init=init,
            audit=log_,
        )
        if result.n_labels < 2:
            return None
        return silhouette(rows, result.labels), result.labels, log_

    outcomes = ordered_map(run, configs, max_workers=max_workers)

    best: GridResult | None = None
    for cfg, outcome in zip(configs, outcomes, strict=True):
        if outcome is None:
            log.debug("grid %s: single label, skipped", cfg)
            continue
        score, labels, run_audit = outcome
        log.debug("grid %s: silhouette %.4f", cfg, score)
        if best is None or score > best.score:
            best = GridResult(
                score=score, labels=labels, params=cfg, evaluated=len(configs), audit=run_audit
            )
    return best


@dataclass
class ClusterNode:
    node_id: int
    parent: int | None
    row_indices: np.ndarray
    path: tuple[int, ...] = ()
    children: list[int] = field(default_factory=list)
    is_leaf: bool = False
    is_outlier_leaf: bool = False
    best_silhouette: float | None = None
    chosen_params: tuple[int, int, int] | None = None
    forced: bool = False
    audit: AuditLog | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.row_indices)

    @property
    def depth(self) -> int:
        return len(self.path)

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "parent": self.parent,
            "size": self.size,
            "depth": self.depth,
            "children": list(self.children),
            "is_leaf": self.is_leaf,
            "is_outlier_leaf": self.is_outlier_leaf,
            "best_silhouette": self.best_silhouette,
            "chosen_params": list(self.chosen_params) if self.chosen_params else None,
            "forced": self.forced,
        }


@dataclass
class ClusterTree:
    nodes: dict[int, ClusterNode]
    root_id: int
    total_n: int
    thresholds: SplitThresholds = field(default_factory=SplitThresholds)

    def leaves(self) -> list[ClusterNode]:
        return [self.nodes[i] for i in sorted(self.nodes) if self.nodes[i].is_leaf]

    @property
    def n_forced(self) -> int:
        return sum(1 for n in self.nodes.values() if n.forced)

    @property
    def n_silhouette_splits(self) -> int:
        return sum(1 for n in self.nodes.values() if n.children and not n.forced)

    def audit_records(self) -> list[dict[str, Any]]:
        """Audit entries of every split's winning run, tagged with the node id."""
        out = []
        for i in sorted(self.nodes):
            node_audit = self.nodes[i].audit
            if node_audit is not None:
                out.extend({"node_id": i, **rec} for rec in node_audit.to_records())
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "root_id": self.root_id,
            "total_n": self.total_n,
            "thresholds": self.thresholds.model_dump(),
            "nodes": [self.nodes[i].to_dict() for i in sorted(self.nodes)],
        }


def _ratio_at_most(size: int, total: int, tau: float) -> bool:
    return size / total <= tau + _RATIO_EPS


def _ratio_above(size: int, total: int, tau: float) -> bool:
    return size / total > tau + _RATIO_EPS


def auto_split(
    matrix: FeatureMatrix | np.ndarray,
    grid: ParamGrid,
    thresholds: SplitThresholds,
    rng: np.random.Generator,
    *,
    init: InitStrategy = "drs",
    max_workers: int = 1,
    audit: bool = False,
) -> ClusterTree:
    """Grow the cluster tree breadth first.

    Node ids follow creation order. Every node searches with a stream derived
    from one base draw and its path of child positions from the root, so the
    tree does not depend on how a level's nodes are scheduled.
    """
    rows = as_rows(matrix)
    total = len(rows)
    base = draw_base(rng)
    root = ClusterNode(node_id=0, parent=None, row_indices=np.arange(total))
    nodes = {0: root}
    next_id = 1

    def search(node: ClusterNode) -> GridResult | None:
        if _ratio_at_most(node.size, total, thresholds.tau_min):
            return None
        return grid_search(
            rows[node.row_indices], grid, derive(base, *node.path), init=init, audit=audit
        )

    level = [root]
    while level:
        results = ordered_map(search, level, max_workers=max_workers)
        upcoming: list[ClusterNode] = []
        for node, res in zip(level, results, strict=True):
            if _ratio_at_most(node.size, total, thresholds.tau_min):
                node.is_leaf = node.is_outlier_leaf = True
                log.debug(
                    "node %d (%d rows) leafed as outlier without search", node.node_id, node.size
                )
                continue
            if res is None:
                node.is_leaf = True
                log.info("node %d (%d rows): no valid split, leaf", node.node_id, node.size)
                continue
            node.best_silhouette = res.score
            node.chosen_params = res.params
            by_score = res.score >= thresholds.tau_sil
            oversized = _ratio_above(node.size, total, thresholds.tau_large)
            if not (by_score or oversized):
                node.is_leaf = True
                log.info(
                    "node %d (%d rows): silhouette %.4f < %.2f, leaf",
                    node.node_id,
                    node.size,
                    res.score,
                    thresholds.tau_sil,
                )
                continue
            node.forced = not by_score
            node.audit = res.audit
            log.info(
                "node %d (%d rows): %s split with (n,k,c)=%s, silhouette %.4f",
                node.node_id,
                node.size,
                "forced" if node.forced else "silhouette",
                res.params,
                res.score,
            )
            for position, label in enumerate(np.unique(res.labels)):
                child = ClusterNode(
                    node_id=next_id,
                    parent=node.node_id,
                    row_indices=node.row_indices[res.labels == label],
                    path=(*node.path, position),
                )
                nodes[next_id] = child
                node.children.append(next_id)
                next_id += 1
                if _ratio_at_most(child.size, total, thresholds.tau_min):
                    child.is_leaf = child.is_outlier_leaf = True
                else:
                    upcoming.append(child)
        level = upcoming

    tree = ClusterTree(nodes=nodes, root_id=0, total_n=total, thresholds=thresholds)
    log.info(
        "Auto-split finished: %d nodes, %d leaves (%d outlier)",
        len(nodes),
        len(tree.leaves()),
        sum(1 for n in tree.leaves() if n.is_outlier_leaf),
    )
    return tree


def leaf_labels(tree: ClusterTree) -> tuple[np.ndarray, np.ndarray]:
    """Dense leaf ids in node-id (breadth-first) order, plus an outlier mask."""
    labels = np.full(tree.total_n, -1, dtype=np.int64)
    outlier = np.zeros(tree.total_n, dtype=bool)
    for dense, leaf in enumerate(tree.leaves()):
        labels[leaf.row_indices] = dense
        outlier[leaf.row_indices] = leaf.is_outlier_leaf
    return labels, outlier
