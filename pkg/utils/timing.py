"""
Timing - wall-clock measurement for training and simulation runs
"""

import time
from functools import wraps

from utils.logger import logger


class TimerContext:
    """Context manager for timing operations"""

    def __init__(self, label: str, log: bool = False):
        self.label = label
        self.log = log
        self.start_time = None
        self.elapsed = 0.0

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed = time.perf_counter() - self.start_time
        if self.log:
            logger.debug("timed operation", operation=self.label, seconds=round(self.elapsed, 6))


def timer(label: str):
    """
    Decorator/context manager for timing operations

    Usage as decorator:
        @timer("certify")
        def certify(...):
            ...

    Usage as context manager:
        with timer("rollout") as t:
            ...
        t.elapsed
    """

    class _Timer(TimerContext):
        def __call__(self, func):
            @wraps(func)
            def wrapper(*args, **kwargs):
                with TimerContext(label, log=True):
                    return func(*args, **kwargs)

            return wrapper

    return _Timer(label, log=True)
