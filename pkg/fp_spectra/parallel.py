"""Deterministic work partitioning.

Work is split into contiguous index ranges and results come back in range order,
so a merge over them is identical whatever the worker count.
"""

from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Any

from loguru import logger


def partition_range(total: int, parts: int) -> list[tuple[int, int]]:
    """Split [0, total) into at most ``parts`` contiguous, near-equal ranges.

    Example:
        >>> partition_range(10, 3)
        [(0, 4), (4, 7), (7, 10)]
    """
    parts = max(1, min(parts, total)) if total else 1
    base, extra = divmod(total, parts)
    ranges = []
    start = 0
    for i in range(parts):
        stop = start + base + (1 if i < extra else 0)
        ranges.append((start, stop))
        start = stop
    return ranges


def run_tasks(fn: Callable[..., Any], tasks: Sequence[tuple], workers: int) -> list[Any]:
    """Apply fn to each argument tuple, in-process or on a process pool.

    Results are returned in task order regardless of completion order.
    """
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*args) for args in tasks]
    logger.debug(f"Dispatching {len(tasks)} tasks to {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for args in tasks]
        return [f.result() for f in futures]
