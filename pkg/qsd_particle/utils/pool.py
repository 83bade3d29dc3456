"""
Replica Pool
============

Runs independent replicas, optionally in worker processes.

Each task carries everything it needs (including its stream coordinates),
so results depend only on the tasks, never on scheduling; they come back
in task order.
"""

import logging
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger(__name__)


def map_replicas(fn, tasks, workers: int = 1) -> list:
    """
    Apply ``fn`` to every task, in order.

    Args:
        fn: Module-level (picklable) function of one task
        tasks: Iterable of picklable tasks
        workers: Process count; 1 runs inline

    Returns:
        List of results aligned with ``tasks``
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]

    workers = min(workers, len(tasks))
    chunksize = max(1, len(tasks) // (4 * workers))
    logger.debug("dispatching %d replicas to %d workers", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, tasks, chunksize=chunksize))
