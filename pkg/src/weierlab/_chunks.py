"""Fixed-size chunking with an optional thread pool.

Chunk boundaries never depend on the worker count, and results are always
returned in chunk order, so reductions over them are reproducible.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")

CHUNK = 1 << 16


def chunk_bounds(n: int, size: int = CHUNK) -> list[tuple[int, int]]:
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def default_workers() -> int:
    env = os.environ.get("WEIERLAB_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def map_chunks(fn: Callable[[int, int, int], T], n: int, workers: int = 1,
               size: int = CHUNK) -> list[T]:
    """Call ``fn(chunk_index, lo, hi)`` for each chunk of ``range(n)``."""
    bounds = chunk_bounds(n, size)
    jobs: Sequence[tuple[int, tuple[int, int]]] = list(enumerate(bounds))
    if workers <= 1 or len(bounds) <= 1:
        return [fn(i, lo, hi) for i, (lo, hi) in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(job[0], *job[1]), jobs))
