#!/usr/bin/env python3
"""
graphbus benchmark CLI: latency | throughput | receiver
Usage:
  python main.py latency --mode intra --sizes 1K,4K,...,4096K --count 100 --out results.csv
  python main.py throughput --mode intra --sizes 100K..10M --rate 10
  python main.py receiver --mode tcp --listen tcp://*:5553
Exit codes: 0 success, 2 configuration error, 3 peer failure.
"""

from __future__ import annotations
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Project root
ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from graphbus.bench.harness import run_latency, run_throughput
from graphbus.bench.receiver import serve
from graphbus.bench.report import ReportFormat, emit_report, format_for_path
from graphbus.bench.spec import Baseline, BenchMode, BenchRole, BenchSpec
from graphbus.core.config import PARAMS_FILE, load_settings
from graphbus.core.errors import BenchTimeout, GraphBusError, PeerUnreachable
from graphbus.core.logger import setup_logging
from graphbus.support.params import ParameterStore, load_params
from graphbus.utils.sizes import parse_sizes

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PEER = 3

logger = logging.getLogger("graphbus.cli")


def _load_params(config_dir: Optional[Path], overrides: List[str]) -> ParameterStore:
    params = ParameterStore()
    if config_dir is not None and (config_dir / PARAMS_FILE).exists():
        params = load_params(config_dir / PARAMS_FILE)
    params.apply_overrides(overrides)
    return params


def _build_spec(args: argparse.Namespace, params: ParameterStore) -> BenchSpec:
    return BenchSpec(
        mode=BenchMode(args.mode),
        sizes=tuple(parse_sizes(args.sizes)),
        count=args.count,
        rate=args.rate,
        role=BenchRole(args.role),
        baseline=Baseline(args.baseline),
        listen=args.listen,
        peer=args.peer,
        config_dir=args.config_dir,
        warmup=params.get_int("bench.warmup", 10),
        timeout_s=params.get_float("bench.timeout_s", 10.0),
        probe_timeout_s=params.get_float("bench.probe_timeout_s", 10.0),
        seed=params.get_int("bench.seed", 7),
        overrides=tuple(args.param),
    )


def run_bench(args: argparse.Namespace, params: ParameterStore) -> int:
    spec = _build_spec(args, params)
    runner = run_latency if args.command == "latency" else run_throughput
    result = runner(spec)
    fmt = ReportFormat(args.format) if args.format else format_for_path(args.out)
    text = emit_report(result, fmt, args.out)
    if args.out is None or fmt is ReportFormat.TABLE:
        sys.stdout.write(text)
    return EXIT_OK


def run_receiver(args: argparse.Namespace, params: ParameterStore) -> int:
    logger.info("Starting echo receiver (Ctrl-C to stop)")
    serve(args.listen, args.peer, config_dir=args.config_dir, overrides=tuple(args.param))
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=[m.value for m in BenchMode], default=BenchMode.INTRA.value)
    p.add_argument("--listen", default=None, help="Endpoint this end publishes on")
    p.add_argument("--peer", default=None, help="Endpoint of the other end")
    p.add_argument("--config-dir", type=Path, default=None, help="Directory with params.yaml / network_setting.yaml")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="Override a parameter (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="graphbus latency / throughput benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, sizes, count in (("latency", "1K,4K,...,4096K", 100), ("throughput", "100K..10M", 100)):
        p = sub.add_parser(name, help=f"Run the {name} benchmark")
        _add_common(p)
        p.add_argument("--sizes", default=sizes, help="Sizes: 1K,4K,...,4096K or 100K..10M")
        p.add_argument("--count", type=int, default=count, help="Packets per size")
        p.add_argument("--rate", type=float, default=10.0, help="Publish rate in Hz (throughput pacing)")
        p.add_argument("--role", choices=[BenchRole.SOLO.value, BenchRole.SENDER.value], default=BenchRole.SOLO.value)
        p.add_argument("--baseline", choices=[b.value for b in Baseline], default=Baseline.NONE.value)
        p.add_argument("--format", choices=[f.value for f in ReportFormat], default=None,
                       help="Report format (default: from --out suffix, table on stdout)")
        p.add_argument("--out", type=Path, default=None, help="Write the report to this file")

    p = sub.add_parser("receiver", help="Echo peer for ipc/tcp runs")
    _add_common(p)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        params = _load_params(args.config_dir, args.param)
        settings = load_settings(params, ROOT)
        setup_logging(settings.log_level, settings.log_dir, settings.log_file)
        if args.command == "receiver":
            return run_receiver(args, params)
        return run_bench(args, params)
    except (PeerUnreachable, BenchTimeout) as e:
        logger.error("Peer failure: %s", e)
        return EXIT_PEER
    except (GraphBusError, ValueError) as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
