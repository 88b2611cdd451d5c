"""Deterministic fan-out over a thread pool.

Compiled kernels release the GIL, so threads give real parallelism.  Results
are always returned in input order, which keeps merged output independent of
scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_default_threads = 1


def set_default_threads(n: int | None) -> None:
    global _default_threads
    _default_threads = max(1, n or os.cpu_count() or 1)


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    items = list(items)
    threads = threads or _default_threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def chunks(n: int, parts: int) -> list[slice]:
    """Split range(n) into at most `parts` contiguous slices."""
    parts = max(1, min(parts, n))
    edges = [n * k // parts for k in range(parts + 1)]
    return [slice(edges[k], edges[k + 1]) for k in range(parts)]
