"""Time system: relative time since a reference epoch."""

from __future__ import annotations
import time
from typing import Callable, Optional

NS_PER_S = 1_000_000_000


class TimeSystem:
    """
    Relative clock. now() is the time elapsed since the epoch set at startup.

    Real mode reads time.monotonic_ns. Virtual mode keeps a manually advanced instant
    (advance / set_time) so simulations and tests are deterministic.
    Reads take no lock.
    """

    def __init__(self, virtual: bool = False, source: Callable[[], int] = time.monotonic_ns):
        self.virtual = virtual
        self._source = source
        self._virtual_ns = 0
        self._epoch_ns = self.source_ns()

    def source_ns(self) -> int:
        """Current absolute instant of the underlying source."""
        return self._virtual_ns if self.virtual else self._source()

    @property
    def epoch_ns(self) -> int:
        return self._epoch_ns

    def set_epoch(self, instant_ns: Optional[int] = None) -> None:
        """Reset the reference point. Defaults to the current source instant."""
        self._epoch_ns = self.source_ns() if instant_ns is None else int(instant_ns)

    def now_ns(self) -> int:
        return self.source_ns() - self._epoch_ns

    def now(self) -> float:
        """Seconds since epoch."""
        return self.now_ns() / NS_PER_S

    def advance(self, delta_ns: int) -> None:
        if not self.virtual:
            raise RuntimeError("advance() is only available in virtual mode")
        if delta_ns < 0:
            raise ValueError("Virtual time cannot move backwards")
        self._virtual_ns += int(delta_ns)

    def set_time(self, instant_ns: int) -> None:
        if not self.virtual:
            raise RuntimeError("set_time() is only available in virtual mode")
        if instant_ns < self._virtual_ns:
            raise ValueError(f"Virtual time cannot move backwards ({instant_ns} < {self._virtual_ns})")
        self._virtual_ns = int(instant_ns)
