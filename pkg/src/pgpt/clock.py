"""Real and virtual millisecond clocks, injectable wherever timing matters."""

from __future__ import annotations

import time


class RealClock:
    def __init__(self):
        self._origin = time.monotonic()

    def now_ms(self) -> int:
        return int((time.monotonic() - self._origin) * 1000)

    def sleep_ms(self, duration_ms: int) -> None:
        if duration_ms > 0:
            time.sleep(duration_ms / 1000.0)


class VirtualClock:
    """Deterministic clock: sleeping just advances the counter."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def sleep_ms(self, duration_ms: int) -> None:
        if duration_ms > 0:
            self._now += duration_ms

    def advance_to(self, t_ms: int) -> None:
        if t_ms > self._now:
            self._now = t_ms
