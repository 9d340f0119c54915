import os
from multiprocessing import Pool
from typing import Callable, Iterable, Optional, TypeVar

from ruitenburg.src.logger_download import logger
from ruitenburg.src.prover import configure

Item = TypeVar("Item")
Result = TypeVar("Result")


def _init_worker(budget: Optional[int], cache_cap: Optional[int]) -> None:
    configure(budget=budget, cache_cap=cache_cap)
    logger.debug(f"[Worker] Process {os.getpid()} ready")


def run_parallel(
    func: Callable[[Item], Result],
    items: Iterable[Item],
    workers: int = 0,
    budget: Optional[int] = None,
    cache_cap: Optional[int] = None,
) -> list[Result]:
    """
    Map a top-level function over ``items``, keeping their order.

    With ``workers <= 1`` everything runs in this process. Each worker
    process gets its own prover with the given budget and its own caches.
    """
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [func(item) for item in items]
    logger.info(f"[Worker] Starting {workers} processes for {len(items)} items")
    with Pool(processes=workers, initializer=_init_worker, initargs=(budget, cache_cap)) as pool:
        results = pool.map(func, items)
    logger.info(f"[Worker] Finished {len(items)} items")
    return results
