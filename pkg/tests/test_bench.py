"""Tests for the bench package: stats, reports, spec validation and measurement runs."""

import io
import math

import pytest

from graphbus.bench.harness import run_latency, run_throughput
from graphbus.bench.packets import BenchPacket, BenchPacketCodec
from graphbus.bench.receiver import start_receiver
from graphbus.bench.report import (
    COLUMNS,
    emit_report,
    read_report_csv,
    render_csv,
    render_plot_data,
    render_table,
)
from graphbus.bench.spec import Baseline, BenchMode, BenchRole, BenchSpec
from graphbus.bench.stats import BenchResult, SizeRecord, summarize, throughput_mbps
from graphbus.core.errors import BenchSpecError, CodecError
from tests.conftest import free_port

K = 1024
M = 1024 * 1024


class FakeSession:
    """Deterministic session: latency grows linearly with payload size."""

    def __init__(self, spec):
        self.spec = spec
        self.sent = []

    def measure(self, data):
        self.sent.append(len(data))
        return 1_000.0 + len(data)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        pass


# stats

def test_throughput_formula_is_exact():
    # 10 packets of 1 MB (1e6 bytes) at 1 ms each -> 1000 MB/s
    assert throughput_mbps(10 * 1_000_000, 10 * 1_000_000) == pytest.approx(1000.0)
    assert throughput_mbps(0, 0) == 0.0
    assert math.isinf(throughput_mbps(10, 0))


def test_summarize_statistics():
    samples = [float(i) * 1_000 for i in range(1, 101)]
    record = summarize("intra", 4 * K, samples)
    assert record.n == 100
    assert record.mean_us == pytest.approx(50.5)
    assert record.median_us == pytest.approx(50.5)
    assert record.p99_us == pytest.approx(99.01)
    assert record.throughput_mbps == pytest.approx(4 * K * 100 * 1e3 / sum(samples))


def test_summarize_rejects_empty_and_negative():
    with pytest.raises(ValueError):
        summarize("intra", 1, [])
    with pytest.raises(ValueError):
        summarize("intra", 1, [10.0, -1.0])


def test_single_sample():
    record = summarize("tcp", 1, [2_000.0])
    assert record.n == 1
    assert record.mean_us == record.median_us == record.p99_us == pytest.approx(2.0)


# reports

def _result():
    result = BenchResult(kind="latency", mode="intra", convention="one-way (publish to callback)")
    result.records.append(summarize("intra", K, [1_000.0, 3_000.0]))
    result.records.append(summarize("intra", 4 * K, [2_000.0, 2_000.0]))
    return result


def test_csv_header_and_round_trip(tmp_path):
    result = _result()
    text = render_csv(result)
    assert text.splitlines()[0] == ",".join(COLUMNS)
    path = tmp_path / "r" / "results.csv"
    emit_report(result, "csv", path)
    assert read_report_csv(path) == result.records


def test_empty_result_writes_header_only():
    text = render_csv(BenchResult())
    assert text == ",".join(COLUMNS) + "\n"
    assert read_report_csv(io.StringIO(text)) == []


def test_table_names_latency_convention():
    text = render_table(_result())
    assert "one-way" in text
    assert "4K" in text
    assert "(no results)" in render_table(BenchResult())


def test_plot_data_blocks():
    result = _result()
    result.records.append(summarize("intra-copy", K, [5_000.0]))
    text = render_plot_data(result)
    lines = text.splitlines()
    assert lines[0].startswith("# latency benchmark")
    assert "# mode intra" in lines and "# mode intra-copy" in lines
    data = [line.split() for line in lines if line and not line.startswith("#")]
    assert [int(row[0]) for row in data] == [K, 4 * K, K]
    assert float(data[0][2]) == result.records[0].mean_us


def test_read_report_rejects_missing_columns():
    with pytest.raises(ValueError):
        read_report_csv(io.StringIO("mode,size_bytes\nintra,1\n"))


# packets

def test_bench_packet_codec():
    codec = BenchPacketCodec()
    packet = BenchPacket(7, 123456789, b"abc")
    assert codec.deserialize(codec.serialize(packet)) == packet
    with pytest.raises(CodecError):
        codec.deserialize(b"short")
    with pytest.raises(CodecError):
        codec.serialize(b"not a packet")


# spec validation

@pytest.mark.parametrize(
    "kwargs",
    [
        {"sizes": ()},
        {"sizes": (0,)},
        {"count": 0},
        {"rate": 0.0},
        {"mode": "tcp", "baseline": "copy"},
        {"mode": "intra", "role": "sender", "listen": "tcp://*:1", "peer": "tcp://h:2"},
        {"mode": "tcp", "role": "sender"},
        {"mode": "udp"},
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(BenchSpecError):
        BenchSpec(**kwargs)


def test_spec_conventions():
    assert BenchSpec(mode="intra").latency_convention.startswith("one-way")
    spec = BenchSpec(mode="tcp", role=BenchRole.SENDER, listen="tcp://*:5554", peer="tcp://10.0.0.2:5553")
    assert spec.crosses_boundary
    assert "round-trip" in spec.latency_convention


# runs with a fake session

def test_latency_run_shape():
    spec = BenchSpec(sizes=(K, 4 * K), count=5, warmup=2)
    result = run_latency(spec, session_factory=FakeSession)
    assert result.kind == "latency"
    assert [r.size_bytes for r in result.records] == [K, 4 * K]
    assert all(r.n == 5 for r in result.records)
    assert result.records[0].mean_us == pytest.approx((1_000 + K) / 1e3)


def test_count_one_gives_one_sample():
    result = run_latency(BenchSpec(sizes=(K,), count=1, warmup=0), session_factory=FakeSession)
    assert result.records[0].n == 1


def test_throughput_run_uses_formula():
    spec = BenchSpec(sizes=(100 * K,), count=3, rate=1000.0, warmup=0)
    result = run_throughput(spec, session_factory=FakeSession)
    record = result.records[0]
    assert record.throughput_mbps == pytest.approx(throughput_mbps(3 * 100 * K, 3 * (1_000.0 + 100 * K)))


# real intra-process runs

def test_intra_latency_is_flat_in_payload_size():
    spec = BenchSpec(mode=BenchMode.INTRA, sizes=(K, 4096 * K), count=100, warmup=10)
    small, big = run_latency(spec).records
    assert big.n == small.n == 100
    # payloads travel by reference, so size barely matters
    assert big.mean_us <= 2 * small.mean_us


def test_copy_baseline_is_much_slower_for_large_payloads():
    sizes = (10 * 1000 * 1000,)
    by_ref = run_throughput(BenchSpec(sizes=sizes, count=10, rate=100.0, warmup=2)).records[0]
    copied = run_throughput(
        BenchSpec(sizes=sizes, count=10, rate=100.0, warmup=2, baseline=Baseline.COPY)
    ).records[0]
    assert copied.mode == "intra-copy"
    assert by_ref.throughput_mbps >= 5 * copied.throughput_mbps


def test_ipc_solo_run_round_trips():
    spec = BenchSpec(mode=BenchMode.INTER_PROCESS, sizes=(K, 64 * K), count=5, warmup=1, probe_timeout_s=30.0)
    result = run_latency(spec)
    assert result.mode == "ipc"
    assert "round-trip" in result.convention
    assert [r.n for r in result.records] == [5, 5]


def test_tcp_solo_run_with_four_megabyte_payloads():
    spec = BenchSpec(mode=BenchMode.CROSS_DEVICE, sizes=(4096 * K,), count=5, warmup=1, probe_timeout_s=30.0)
    result = run_latency(spec)
    assert result.mode == "tcp"
    (record,) = result.records
    assert record.n == 5
    assert math.isfinite(record.mean_us)
    assert 0 < record.mean_us < 1e6


def test_listen_only_receiver_echoes_for_a_sender():
    receive_port = free_port()
    ctx = start_receiver(listen=f"tcp://*:{receive_port}")
    try:
        spec = BenchSpec(
            mode=BenchMode.CROSS_DEVICE,
            role=BenchRole.SENDER,
            listen="tcp://*:0",
            peer=f"tcp://127.0.0.1:{receive_port}",
            sizes=(K,),
            count=3,
            warmup=1,
            probe_timeout_s=20.0,
        )
        (record,) = run_latency(spec).records
        assert record.n == 3
        assert math.isfinite(record.mean_us)
    finally:
        ctx.shutdown()
