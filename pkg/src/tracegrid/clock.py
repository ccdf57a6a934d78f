"""Logical clocks. Timestamps are integer milliseconds everywhere.

The registry and store take a clock so tests and the simulator stay fully
deterministic; the service uses the system clock.
"""
from __future__ import annotations

import time
from typing import Protocol


class Clock(Protocol):
    def now_ms(self) -> int: ...


class SystemClock:
    def now_ms(self) -> int:
        return time.time_ns() // 1_000_000


class LogicalClock:
    """Counter clock: first reading is `start`, each later reading adds `step`."""

    def __init__(self, start: int = 0, step: int = 1):
        self._now = start
        self._step = step

    def now_ms(self) -> int:
        now = self._now
        self._now += self._step
        return now
