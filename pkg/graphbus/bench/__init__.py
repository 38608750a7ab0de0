"""Benchmarks: latency and throughput across intra, ipc and tcp modes."""

from graphbus.bench.spec import Baseline, BenchMode, BenchRole, BenchSpec
from graphbus.bench.stats import BenchResult, SizeRecord, summarize, throughput_mbps
from graphbus.bench.harness import BenchSession, run_latency, run_throughput
from graphbus.bench.report import ReportFormat, emit_report, read_report_csv

__all__ = [
    "Baseline",
    "BenchMode",
    "BenchRole",
    "BenchSpec",
    "BenchResult",
    "SizeRecord",
    "summarize",
    "throughput_mbps",
    "BenchSession",
    "run_latency",
    "run_throughput",
    "ReportFormat",
    "emit_report",
    "read_report_csv",
]
