from __future__ import annotations

import logging

import numpy as np

from ..errors import TooFewTurbines
from .models import Fleet

log = logging.getLogger(__name__)

__all__ = ["nearest_neighbour_subsample", "pairwise_distances"]

_SEED_NEIGHBOURS = 5


def pairwise_distances(xy: np.ndarray) -> np.ndarray:
    diff = xy[:, None, :] - xy[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def nearest_neighbour_subsample(fleet: Fleet, n: int) -> Fleet:
    """Pick the ``n`` spatially closest turbines by greedy set growth.

    The seed is the turbine with the smallest mean distance to its five
    nearest neighbours; then the remaining turbine closest to the current set
    joins until ``n`` are chosen. Ties go to the lowest input index and the
    result keeps input order.
    """
    size = len(fleet)
    if n < 1 or n > size:
        raise TooFewTurbines(f"cannot subsample {n} turbines from a fleet of {size}")
    if n == size:
        return fleet

    xy = np.array([[m.utm_x, m.utm_y] for m in fleet.metas], dtype=np.float64)
    dist = pairwise_distances(xy)

    m = min(_SEED_NEIGHBOURS, size - 1)
    if m == 0:
        seed = 0
    else:
        off_diag = dist + np.diag(np.full(size, np.inf))
        nearest = np.sort(off_diag, axis=1)[:, :m]
        seed = int(np.argmin(nearest.mean(axis=1)))

    chosen = np.zeros(size, dtype=bool)
    chosen[seed] = True
    # distance from every turbine to the current set
    to_set = dist[seed].copy()
    for _ in range(n - 1):
        candidates = np.where(chosen, np.inf, to_set)
        nxt = int(np.argmin(candidates))
        chosen[nxt] = True
        np.minimum(to_set, dist[nxt], out=to_set)

    keep = [fleet.ids[i] for i in np.flatnonzero(chosen)]
    log.info("Subsampled %d of %d turbines around %s", n, size, fleet.ids[seed])
    return fleet.subset(keep)
