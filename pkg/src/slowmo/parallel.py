"""Order-preserving fan-out over a process pool."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_workers(workers: int | None) -> int:
    if workers is None or workers <= 0:
        return os.cpu_count() or 1
    return int(workers)


def pmap(fn, items, workers: int | None = 1) -> list:
    """``[fn(x) for x in items]``, optionally in worker processes.

    Results come back in input order whatever the worker count, so callers
    that aggregate in list order stay deterministic.
    """
    items = list(items)
    n = min(resolve_workers(workers), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def chunk_bounds(total: int, pieces: int) -> list[tuple[int, int]]:
    pieces = max(1, min(pieces, total))
    edges = [total * k // pieces for k in range(pieces + 1)]
    return [(edges[k], edges[k + 1]) for k in range(pieces)]
