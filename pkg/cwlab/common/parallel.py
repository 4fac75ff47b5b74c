"""
Evaluation of independent experiment cells on a bounded thread pool
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from tqdm import tqdm

from cwlab.common.exceptions import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = "CWLAB_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Number of workers allowed by the CWLAB_THREADS environment variable (default 1)"""
    raw = os.environ.get(THREADS_ENV, "1").strip() or "1"
    try:
        count = int(raw)
    except ValueError as error:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from error
    if count < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {count}")
    return count


def ordered_map(func: Callable[[T], R], items: Iterable[T], desc: Optional[str] = None, progress: bool = False) -> List[R]:
    """
    Apply func to every item, results in input order

    Runs serially with a single worker. Completion order never leaks into the
    output, so results do not depend on the thread count as long as each item
    carries its own random stream.
    """
    items = list(items)
    workers = min(worker_count(), max(len(items), 1))
    if workers == 1:
        return [func(item) for item in tqdm(items, desc=desc, disable=not progress)]
    logger.info("Evaluating %d cells on %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(tqdm(pool.map(func, items), total=len(items), desc=desc, disable=not progress))
