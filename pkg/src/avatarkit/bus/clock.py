"""Monotonic clocks: virtual (deterministic tests) and wall (live mode)."""

import time


class SimClock:
    """Manually advanced monotonic clock, in seconds."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def now_us(self) -> int:
        return int(round(self._now * 1e6))

    def set(self, t: float) -> None:
        if t < self._now:
            raise ValueError(f"clock cannot move backwards ({t} < {self._now})")
        self._now = t

    @property
    def virtual(self) -> bool:
        return True


class WallClock:
    def __init__(self):
        self._epoch = time.monotonic()

    def now(self) -> float:
        return time.monotonic() - self._epoch

    def now_us(self) -> int:
        return int(round(self.now() * 1e6))

    @property
    def virtual(self) -> bool:
        return False
