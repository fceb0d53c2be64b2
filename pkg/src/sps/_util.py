"""Worker-pool plumbing shared by the experiment drivers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    """Workers per pool; capped by the SPS_THREADS environment variable."""
    cap = os.environ.get("SPS_THREADS")
    n = os.cpu_count() or 1
    n = min(n, 4)
    if cap:
        n = max(1, min(n, int(cap)))
    return n


def parallel_map(fn, items):
    """Order-preserving map over independent tasks.

    Each task must be pure given its item, so the result list is identical
    whether the pool has one worker or many.
    """
    items = list(items)
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
