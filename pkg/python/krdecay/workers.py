"""Worker pool used by the grid sweeps."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from .errors import ConfigError

LOGGER = logging.getLogger(__name__)

WORKERS_ENV = "KRDECAY_WORKERS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(workers: Optional[int] = None) -> int:
    """Pool size: ``workers`` if given, else ``$KRDECAY_WORKERS``, else the CPU count."""
    if workers is None:
        raw = os.environ.get(WORKERS_ENV)
        if raw:
            try:
                workers = int(raw)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}")
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigError(f"worker count must be at least 1, got {workers}")
    return workers


def map_ordered(func: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """Apply ``func`` to every item, results in input order.

    The first exception raised by a call propagates unchanged.
    """
    items = list(items)
    count = min(resolve_workers(workers), max(len(items), 1))
    if count == 1:
        return [func(item) for item in items]
    LOGGER.debug("evaluating %d grid points on %d workers", len(items), count)
    with ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(func, items))
