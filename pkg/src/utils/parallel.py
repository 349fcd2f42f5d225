from multiprocessing import Pool
from typing import Callable, List, Optional, Sequence

from config.config_handler import ConfigHandler


def resolve_workers(requested: Optional[int] = None) -> int:
    if requested is not None and requested > 0:
        return requested
    return ConfigHandler().get('cli', 'workers')


def parallel_map(func: Callable, tasks: Sequence, workers: Optional[int] = None) -> List:
    # Pool.map keeps input order, so output assembly never depends on scheduling
    workers = resolve_workers(workers)
    if workers <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    with Pool(processes=min(workers, len(tasks))) as pool:
        return pool.map(func, tasks)
