from __future__ import annotations

import concurrent.futures as _fut
from collections.abc import Callable, Iterable
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")

__all__ = ["ordered_map"]


def ordered_map(fn: Callable[[T], R], items: Iterable[T], *, max_workers: int = 1) -> list[R]:
    """Apply ``fn`` to each item, optionally on a thread pool.

    Results come back in input order whatever the completion order, so
    downstream reductions always sum in the same sequence.
    """
    work = list(items)
    if max_workers <= 1 or len(work) <= 1:
        return [fn(x) for x in work]
    with _fut.ThreadPoolExecutor(max_workers=max_workers) as ex:
        futs = [ex.submit(fn, x) for x in work]
        return [f.result() for f in futs]
