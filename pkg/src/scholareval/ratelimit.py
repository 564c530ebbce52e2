"""Sliding-window rate limiting shared by all outbound clients.

The clock and sleeper are injectable so the windowing property can be tested
under a virtual clock without real waiting.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from typing import Callable

from .errors import ValidationError


class RateLimiter:
    """Grants at most ``limit`` acquisitions inside any window of ``window`` seconds.

    Thread-safe; a single instance is shared across all concurrent pipeline
    branches so quota consumption is serialized.
    """

    def __init__(
        self,
        limit: int,
        window: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        if limit < 1:
            raise ValidationError("rate limit must be >= 1")
        if window <= 0:
            raise ValidationError("rate window must be > 0")
        self.limit = limit
        self.window = window
        self._clock = clock
        self._sleeper = sleeper
        self._lock = threading.Lock()
        self._grants: deque[float] = deque()

    def acquire(self) -> float:
        """Block until a slot is free; returns the grant timestamp."""
        while True:
            with self._lock:
                now = self._clock()
                while self._grants and self._grants[0] <= now - self.window:
                    self._grants.popleft()
                if len(self._grants) < self.limit:
                    self._grants.append(now)
                    return now
                wait = self._grants[0] + self.window - now
            self._sleeper(max(wait, 1e-4))


class NullLimiter:
    """No-op stand-in for contexts that need no throttling (pure fixtures)."""

    def acquire(self) -> float:
        return 0.0
