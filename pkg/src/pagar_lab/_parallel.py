"""Thread-pool map honoring the PAGAR_LAB_THREADS cap."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("PAGAR_LAB_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Map preserving order; runs threaded only when the cap allows it."""
    items = list(items)
    cap = thread_cap()
    if cap <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, items))
