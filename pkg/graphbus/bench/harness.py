"""
Latency and throughput harness.

The same measurement loop runs in every mode; only the generated network settings differ.
Intra mode times publish -> callback on one clock (one-way). Cross-boundary modes time
publish -> echo received and halve it (round-trip / 2), so no clock sync is needed.
"""

from __future__ import annotations
import itertools
import logging
import multiprocessing
import queue
import shutil
import socket
import tempfile
import time
from pathlib import Path
from typing import Any, Callable, Optional, Tuple

import numpy as np

from graphbus.api.context import RuntimeContext, init_runtime
from graphbus.bench.packets import (
    DATA_CHANNEL,
    ECHO_CHANNEL,
    PACKET_TAG,
    BenchPacket,
    BenchPacketCodec,
    bench_codecs,
    write_network_setting,
)
from graphbus.bench.receiver import serve
from graphbus.bench.spec import Baseline, BenchMode, BenchRole, BenchSpec
from graphbus.bench.stats import BenchResult, SizeRecord, summarize
from graphbus.core.config import NETWORK_FILE, PARAMS_FILE
from graphbus.core.errors import BenchSpecError, BenchTimeout, PeerUnreachable
from graphbus.core.types import InvokeType

logger = logging.getLogger("graphbus.bench")

PROBE_INTERVAL_S = 0.1
CHILD_JOIN_S = 5.0


def _free_tcp_port() -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class BenchSession:
    """
    Owns the sender runtime (and, in Solo cross-boundary runs, the spawned receiver).
    `measure(data)` sends one packet and returns its latency in ns.
    """

    def __init__(self, spec: BenchSpec):
        if spec.role is BenchRole.RECEIVER:
            raise BenchSpecError("a receiver does not run measurements; use `bench receiver`")
        self.spec = spec
        self.ctx: Optional[RuntimeContext] = None
        self._inbox: "queue.Queue[Tuple[int, float]]" = queue.Queue()
        self._seq = itertools.count(1)
        self._codec = BenchPacketCodec()
        self._tmp: Optional[tempfile.TemporaryDirectory] = None
        self._child: Optional[multiprocessing.process.BaseProcess] = None
        self._stop_child: Any = None

    # setup

    def open(self) -> "BenchSession":
        spec = self.spec
        self._tmp = tempfile.TemporaryDirectory(prefix="graphbus-bench-")
        tmp = Path(self._tmp.name)
        if spec.config_dir is not None and (Path(spec.config_dir) / PARAMS_FILE).exists():
            shutil.copy(Path(spec.config_dir) / PARAMS_FILE, tmp / PARAMS_FILE)
        if not spec.crosses_boundary:
            self.ctx = init_runtime(tmp, overrides=spec.overrides, codecs=bench_codecs())
            if spec.baseline is Baseline.COPY:
                self.ctx.from_graph(DATA_CHANNEL, InvokeType.SERIAL, self._on_copied)
            else:
                self.ctx.from_any(DATA_CHANNEL, InvokeType.SERIAL, PACKET_TAG, self._on_data)
            return self

        config_dir = self._sender_config(tmp)
        self.ctx = init_runtime(config_dir, overrides=spec.overrides, codecs=bench_codecs())
        self.ctx.from_any(ECHO_CHANNEL, InvokeType.SERIAL, PACKET_TAG, self._on_echo)
        self._probe()
        return self

    def _sender_config(self, tmp: Path) -> Path:
        spec = self.spec
        if spec.role is BenchRole.SENDER:
            if spec.listen and spec.peer:
                write_network_setting(tmp, spec.listen, [DATA_CHANNEL], spec.peer, [ECHO_CHANNEL])
                return tmp
            if not (Path(spec.config_dir) / NETWORK_FILE).exists():
                raise BenchSpecError(f"{spec.config_dir} has no {NETWORK_FILE}")
            return Path(spec.config_dir)
        if spec.mode is BenchMode.INTER_PROCESS:
            send_uri = f"ipc://{tmp / 'data.sock'}"
            echo_uri = f"ipc://{tmp / 'echo.sock'}"
        else:
            send_uri = f"tcp://127.0.0.1:{_free_tcp_port()}"
            echo_uri = f"tcp://127.0.0.1:{_free_tcp_port()}"
        write_network_setting(tmp, send_uri, [DATA_CHANNEL], echo_uri, [ECHO_CHANNEL])
        self._spawn_receiver(listen=echo_uri, peer=send_uri)
        return tmp

    def _spawn_receiver(self, listen: str, peer: str) -> None:
        mp = multiprocessing.get_context("spawn")
        self._stop_child = mp.Event()
        level = logging.getLevelName(logging.getLogger("graphbus").getEffectiveLevel())
        self._child = mp.Process(
            target=serve,
            args=(listen, peer, self._stop_child),
            kwargs={"overrides": tuple(self.spec.overrides), "log_level": level},
            name="graphbus-bench-receiver",
            daemon=True,
        )
        self._child.start()
        logger.info("Spawned receiver pid=%s on %s", self._child.pid, listen)

    def _probe(self) -> None:
        """Send empty packets until one echo returns, proving both directions are wired."""
        deadline = time.monotonic() + self.spec.probe_timeout_s
        while time.monotonic() < deadline:
            if self._child is not None and not self._child.is_alive():
                raise PeerUnreachable(f"receiver process exited with code {self._child.exitcode}")
            seq = self._send(b"")
            try:
                self._await(seq, PROBE_INTERVAL_S)
                logger.info("Peer answered probe")
                return
            except BenchTimeout:
                continue
        raise PeerUnreachable(f"no echo from peer within {self.spec.probe_timeout_s:.1f}s")

    # measurement

    def measure(self, data: bytes) -> float:
        seq = self._send(data)
        return self._await(seq, self.spec.timeout_s)

    def _send(self, data: bytes) -> int:
        assert self.ctx is not None
        seq = next(self._seq)
        packet = BenchPacket(seq, self.ctx.clock.now_ns(), data)
        if self.spec.baseline is Baseline.COPY:
            self.ctx.to_graph(DATA_CHANNEL, self._codec.serialize(packet))
        else:
            self.ctx.to_any(DATA_CHANNEL, packet)
        return seq

    def _await(self, seq: int, timeout: float) -> float:
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BenchTimeout(f"packet {seq} not received within {timeout:.1f}s")
            try:
                got, latency_ns = self._inbox.get(timeout=remaining)
            except queue.Empty:
                continue
            if got == seq:
                return latency_ns
            # stale echo from an earlier probe

    def _on_data(self, packet: BenchPacket) -> None:
        self._inbox.put((packet.seq, float(self.ctx.clock.now_ns() - packet.sent_ns)))

    def _on_copied(self, blob: bytes) -> None:
        packet = self._codec.deserialize(blob)
        self._inbox.put((packet.seq, float(self.ctx.clock.now_ns() - packet.sent_ns)))

    def _on_echo(self, packet: BenchPacket) -> None:
        self._inbox.put((packet.seq, (self.ctx.clock.now_ns() - packet.sent_ns) / 2.0))

    # teardown

    def close(self) -> None:
        if self.ctx is not None:
            self.ctx.shutdown()
            self.ctx = None
        if self._child is not None:
            self._stop_child.set()
            self._child.join(CHILD_JOIN_S)
            if self._child.is_alive():
                logger.warning("Receiver did not stop, terminating")
                self._child.terminate()
                self._child.join(CHILD_JOIN_S)
            self._child = None
        if self._tmp is not None:
            self._tmp.cleanup()
            self._tmp = None

    def __enter__(self) -> "BenchSession":
        try:
            return self.open()
        except BaseException:
            self.close()
            raise

    def __exit__(self, *exc: Any) -> None:
        self.close()


def _run(spec: BenchSpec, kind: str, paced: bool, session_factory: Callable[[BenchSpec], BenchSession]) -> BenchResult:
    rng = np.random.default_rng(spec.seed)
    label = spec.mode.value if spec.baseline is Baseline.NONE else f"{spec.mode.value}-{spec.baseline.value}"
    result = BenchResult(kind=kind, mode=label, convention=spec.latency_convention)
    period = 1.0 / spec.rate
    with session_factory(spec) as session:
        for size in spec.sizes:
            data = rng.bytes(size)
            for _ in range(spec.warmup):
                session.measure(data)
            samples = []
            next_at = time.monotonic()
            for _ in range(spec.count):
                if paced:
                    delay = next_at - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
                    next_at += period
                samples.append(session.measure(data))
            record: SizeRecord = summarize(label, size, samples)
            result.records.append(record)
            logger.info(
                "%s %s size=%d n=%d mean=%.1fus p99=%.1fus thr=%.1fMB/s",
                kind, label, size, record.n, record.mean_us, record.p99_us, record.throughput_mbps,
            )
    return result


def run_latency(spec: BenchSpec, session_factory: Callable[[BenchSpec], BenchSession] = BenchSession) -> BenchResult:
    """Back-to-back packets; per-size latency statistics."""
    return _run(spec, "latency", paced=False, session_factory=session_factory)


def run_throughput(spec: BenchSpec, session_factory: Callable[[BenchSpec], BenchSession] = BenchSession) -> BenchResult:
    """Packets paced at spec.rate; throughput = Σbytes / Σlatency."""
    return _run(spec, "throughput", paced=True, session_factory=session_factory)
