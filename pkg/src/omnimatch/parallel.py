"""Order-preserving replicate execution."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_threads() -> int:
    return os.cpu_count() or 1


def _limit_blas():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return
    threadpool_limits(1)


def run_replicates(fn, jobs, threads: int | None = 1) -> list:
    """Evaluate ``fn(*job)`` for every job; results come back in job order.

    ``threads > 1`` fans out to worker processes with single-threaded BLAS.
    """
    jobs = list(jobs)
    threads = default_threads() if threads is None else int(threads)
    if threads <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads, initializer=_limit_blas) as pool:
        return list(pool.map(fn, *zip(*jobs)))
