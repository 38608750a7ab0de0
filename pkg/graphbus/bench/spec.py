"""
Benchmark specification: mode, sizes, count, rate, role.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

from graphbus.core.errors import BenchSpecError


class BenchMode(str, Enum):
    INTRA = "intra"
    INTER_PROCESS = "ipc"
    CROSS_DEVICE = "tcp"


class BenchRole(str, Enum):
    SOLO = "solo"          # spawns the receiver itself
    SENDER = "sender"      # receiver runs elsewhere
    RECEIVER = "receiver"


class Baseline(str, Enum):
    NONE = "none"
    COPY = "copy"          # serialize + deserialize instead of passing the reference


@dataclass(frozen=True)
class BenchSpec:
    """One benchmark run. Latency runs send back-to-back; throughput runs pace at `rate` Hz."""
    mode: BenchMode = BenchMode.INTRA
    sizes: Tuple[int, ...] = (1024,)
    count: int = 100
    rate: float = 10.0
    role: BenchRole = BenchRole.SOLO
    baseline: Baseline = Baseline.NONE
    listen: Optional[str] = None
    peer: Optional[str] = None
    config_dir: Optional[Path] = None
    warmup: int = 10
    timeout_s: float = 10.0
    probe_timeout_s: float = 10.0
    seed: int = 7
    overrides: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "mode", BenchMode(self.mode))
            object.__setattr__(self, "role", BenchRole(self.role))
            object.__setattr__(self, "baseline", Baseline(self.baseline))
        except ValueError as e:
            raise BenchSpecError(str(e)) from e
        object.__setattr__(self, "sizes", tuple(self.sizes))
        if not self.sizes:
            raise BenchSpecError("sizes must not be empty")
        if any(isinstance(s, bool) or not isinstance(s, int) or s < 1 for s in self.sizes):
            raise BenchSpecError(f"every size must be an integer >= 1 byte, got {list(self.sizes)}")
        if self.count < 1:
            raise BenchSpecError(f"count must be >= 1, got {self.count}")
        if not self.rate > 0:
            raise BenchSpecError(f"rate must be > 0 Hz, got {self.rate}")
        if self.warmup < 0:
            raise BenchSpecError(f"warmup must be >= 0, got {self.warmup}")
        if not self.timeout_s > 0 or not self.probe_timeout_s > 0:
            raise BenchSpecError("timeouts must be > 0")
        if self.baseline is Baseline.COPY and self.mode is not BenchMode.INTRA:
            raise BenchSpecError("--baseline copy only applies to intra mode")
        if self.role is BenchRole.SENDER and self.mode is BenchMode.INTRA:
            raise BenchSpecError("intra mode has no separate sender")
        if self.role is BenchRole.SENDER and not self.config_dir and not (self.listen and self.peer):
            raise BenchSpecError("sender role needs --listen and --peer (or a --config-dir with network_setting.yaml)")

    @property
    def crosses_boundary(self) -> bool:
        return self.mode is not BenchMode.INTRA

    @property
    def latency_convention(self) -> str:
        return "round-trip/2 via echo" if self.crosses_boundary else "one-way (publish to callback)"
