"""Thread-pool helpers for the numpy code paths."""
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np

GRAIN = 1024  # minimum rows per worker in run()


@lru_cache(maxsize=None)
def pool(nthreads):
    return ThreadPoolExecutor(max_workers=nthreads, thread_name_prefix="gatherfv")


def chunks(n, nthreads):
    """Contiguous, non-empty [a, b) ranges covering range(n)."""
    bounds = np.linspace(0, n, nthreads + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run(n, nthreads, fn):
    """Call fn(a, b) over chunks of range(n), on the pool when nthreads > 1."""
    nthreads = min(nthreads, n // GRAIN)
    if nthreads <= 1:
        fn(0, n)
        return
    futures = [pool(nthreads).submit(fn, a, b) for a, b in chunks(n, nthreads)]
    for fut in futures:
        fut.result()


def map_chunks(n, nthreads, fn):
    """Like run but collects fn(a, b) results in chunk order."""
    if nthreads <= 1 or n < 2 * nthreads:
        return [fn(0, n)]
    futures = [pool(nthreads).submit(fn, a, b) for a, b in chunks(n, nthreads)]
    return [fut.result() for fut in futures]
