"""Order-preserving fan-out over independent jobs."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

#: Environment variable holding the default thread budget.
THREADS_ENV = "CASCADE_KPZ_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def pmap(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly on a thread pool; results keep input order."""
    items = list(items)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
