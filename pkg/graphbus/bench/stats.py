"""
Per-size latency statistics and throughput.
Latencies are kept in nanoseconds; throughput is total bytes / summed latency in MB/s (1 MB = 1e6 bytes).
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np


@dataclass(frozen=True)
class SizeRecord:
    """One row of a benchmark report."""
    mode: str
    size_bytes: int
    n: int
    mean_us: float
    median_us: float
    p99_us: float
    throughput_mbps: float


@dataclass
class BenchResult:
    kind: str = "latency"
    mode: str = "intra"
    convention: str = ""
    records: List[SizeRecord] = field(default_factory=list)


def throughput_mbps(total_bytes: int, total_latency_ns: float) -> float:
    """Σbytes / Σlatency, in MB/s."""
    if total_latency_ns <= 0:
        return float("inf") if total_bytes > 0 else 0.0
    return total_bytes * 1e3 / total_latency_ns


def summarize(mode: str, size_bytes: int, latencies_ns: Sequence[float]) -> SizeRecord:
    """Aggregate one size's samples. Requires at least one sample."""
    if len(latencies_ns) == 0:
        raise ValueError("no latency samples")
    arr = np.asarray(latencies_ns, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("negative latency sample")
    return SizeRecord(
        mode=str(mode),
        size_bytes=int(size_bytes),
        n=int(arr.size),
        mean_us=float(arr.mean() / 1e3),
        median_us=float(np.median(arr) / 1e3),
        p99_us=float(np.percentile(arr, 99) / 1e3),
        throughput_mbps=throughput_mbps(int(size_bytes) * int(arr.size), float(arr.sum())),
    )
