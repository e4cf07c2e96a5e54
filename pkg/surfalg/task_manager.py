"""
Task manager for fanning independent checks across worker threads.
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from surfalg.config import CONFIG

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class TaskManager:
    """Singleton task manager owning the shared worker pool"""

    _instance = None
    _lock = threading.Lock()

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
                    cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return
        self._pool: ThreadPoolExecutor | None = None
        self._pool_size = 0
        self._pool_lock = threading.Lock()
        self._initialized = True

    def _executor(self, workers: int) -> ThreadPoolExecutor:
        with self._pool_lock:
            if self._pool is None or self._pool_size != workers:
                if self._pool is not None:
                    self._pool.shutdown(wait=True)
                self._pool = ThreadPoolExecutor(
                    max_workers=workers, thread_name_prefix="surfalg"
                )
                self._pool_size = workers
            return self._pool

    def map_ordered(
        self, fn: Callable[[T], R], items: Iterable[T], workers: int | None = None
    ) -> list[R]:
        """Apply fn to every item; results come back in input order."""
        items = list(items)
        if workers is None:
            workers = int(CONFIG.get("workers.count", 1))
        if workers <= 1 or len(items) <= 1:
            return [fn(item) for item in items]
        logger.debug(f"[Tasks] {len(items)} items on {workers} workers")
        return list(self._executor(workers).map(fn, items))

    def shutdown(self):
        """Release the worker pool"""
        with self._pool_lock:
            if self._pool is not None:
                self._pool.shutdown(wait=True)
                self._pool = None
                self._pool_size = 0


# Global task manager instance
task_manager = TaskManager()


__all__ = ["TaskManager", "task_manager"]
