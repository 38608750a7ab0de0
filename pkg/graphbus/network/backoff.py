"""Exponential reconnect backoff: 100 ms doubling to a 5 s cap."""

from __future__ import annotations
import random
from typing import Optional


class ReconnectBackoff:
    """Delay schedule for subscriber reconnects. reset() after a successful connect."""

    def __init__(
        self,
        initial_delay: float = 0.1,
        max_delay: float = 5.0,
        factor: float = 2.0,
        jitter: float = 0.0,
        rng: Optional[random.Random] = None,
    ):
        if initial_delay <= 0 or max_delay < initial_delay or factor < 1.0:
            raise ValueError("backoff needs 0 < initial_delay <= max_delay and factor >= 1")
        self.initial_delay = initial_delay
        self.max_delay = max_delay
        self.factor = factor
        self.jitter = jitter
        self._rng = rng or random.Random()
        self.attempts = 0

    def next_delay(self) -> float:
        """Delay before the next attempt; grows until max_delay."""
        delay = min(self.initial_delay * (self.factor ** self.attempts), self.max_delay)
        if delay < self.max_delay:
            self.attempts += 1
        if self.jitter:
            delay *= 1.0 + self.jitter * (self._rng.random() * 2.0 - 1.0)
        return max(0.0, min(delay, self.max_delay))

    def reset(self) -> None:
        self.attempts = 0
