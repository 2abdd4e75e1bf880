"""Injectable time source.

All timing behaviour that matters to tests (retry backoff, breaker reopen
windows, event timestamps) goes through a Clock so the suites can run
under a controlled virtual clock instead of wall time.
"""

from __future__ import annotations

import threading
import time


class Clock:
    """Real wall clock."""

    def now(self) -> float:
        """Seconds since the epoch."""
        return time.time()

    def now_ms(self) -> int:
        return int(self.now() * 1000)

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class SimClock(Clock):
    """Manually advanced clock; sleep() jumps time forward instantly.

    Records every sleep duration so tests can assert backoff schedules.
    """

    def __init__(self, start: float = 1_700_000_000.0):
        self._now = start
        self._lock = threading.Lock()
        self.sleeps: list[float] = []

    def now(self) -> float:
        with self._lock:
            return self._now

    def sleep(self, seconds: float) -> None:
        with self._lock:
            self.sleeps.append(seconds)
            if seconds > 0:
                self._now += seconds

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._now += seconds
