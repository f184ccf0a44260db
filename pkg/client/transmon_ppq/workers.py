"""Thread pool for independent simulation jobs.

numpy releases the GIL inside matrix products, so threads are enough to
overlap propagations of different step widths, initial states or sample
chunks.
"""
from __future__ import annotations

import concurrent.futures
import logging
from typing import Callable, Optional, Sequence, TypeVar

log = logging.getLogger(__name__)

JobT = TypeVar("JobT")
ResultT = TypeVar("ResultT")


def run_jobs(
        func: Callable[[JobT], ResultT],
        jobs: Sequence[JobT],
        max_workers: Optional[int] = 1
) -> list[ResultT]:
    """Run func over jobs and return the results in job order.

    Args:
        func: Callable applied to every job.
        jobs: Job arguments.
        max_workers: Thread count; 1 or less runs inline.

    Returns:
        Results ordered like ``jobs`` regardless of completion order.
    """
    if not max_workers or max_workers <= 1 or len(jobs) <= 1:
        return [func(job) for job in jobs]

    results: dict[int, ResultT] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_index = {
            executor.submit(func, job): index for index, job in enumerate(jobs)
        }
        for future in concurrent.futures.as_completed(future_to_index):
            index = future_to_index[future]
            try:
                results[index] = future.result()
            except Exception:
                log.error(f"Job {index} failed", exc_info=True)
                for pending in future_to_index:
                    pending.cancel()
                raise
    return [results[index] for index in range(len(jobs))]
