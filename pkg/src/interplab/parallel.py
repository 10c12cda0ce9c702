"""Order-preserving map over independent instances, capped by ``INTERPLAB_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def workers():
    try:
        cap = int(os.environ.get("INTERPLAB_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


def ordered_map(fn, items):
    """``[fn(x) for x in items]``, in worker processes when more than one is allowed.

    Results come back in input order, so reductions stay deterministic.
    """
    items = list(items)
    n = workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
