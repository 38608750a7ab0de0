"""Integration tests for network.bridge over loopback sockets."""

import random
import time

import pytest

from graphbus.core.errors import BindFailure
from graphbus.core.types import ChannelId, DiscardReason, InvokeType
from graphbus.messaging.codecs import ChannelBindings, default_codecs
from graphbus.messaging.wire import STREAM_PREFIX, pack, unpack
from graphbus.network.backoff import ReconnectBackoff
from graphbus.network.bridge import (
    SUBSCRIBE_CHANNEL,
    NetworkBridge,
    decode_handshake,
    encode_handshake,
    resolve_reply_uri,
    start_bridge,
)
from graphbus.network.config import NetworkConfig, network_config_from_mapping, parse_endpoint
from graphbus.network.transport import FramedStream, listen

PRE = ChannelId("pre_channel")


def _config(publish=None, exports=(), subscribe=None, imports=()):
    network = {}
    if publish:
        network["publisher"] = {"ip": publish, "channels": list(exports)}
    if subscribe:
        network["subscribers"] = [{"ip": subscribe, "channels": list(imports)}]
    return network_config_from_mapping({"network": network})


def _fast_backoff():
    return ReconnectBackoff(initial_delay=0.02, max_delay=0.2)


def _wait_until(predicate, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.01)
    return predicate()


def _subscriber(graph, uri, received, tag="bytes"):
    bindings = ChannelBindings()
    bindings.bind(PRE, tag)
    graph.from_graph(PRE, InvokeType.SERIAL, received.append)
    cfg = _config(subscribe=uri, imports=["pre_channel"])
    return NetworkBridge(cfg, graph, bindings=bindings, backoff_factory=_fast_backoff).start()


def _publisher(graph, uri="tcp://127.0.0.1:0"):
    return NetworkBridge(_config(publish=uri, exports=["pre_channel"]), graph).start()


def test_handshake_round_trip():
    frame = encode_handshake("abc123", (PRE, ChannelId("b")))
    channel, data = unpack(frame)
    assert channel == SUBSCRIBE_CHANNEL
    handshake = decode_handshake(data)
    assert handshake.instance_id == "abc123"
    assert handshake.channels == frozenset({PRE, ChannelId("b")})
    assert handshake.publish_uri is None


def test_handshake_carries_publish_uri():
    _, data = unpack(encode_handshake("abc123", (PRE,), "tcp://*:5554"))
    instance, channels, publish_uri = decode_handshake(data)
    assert instance == "abc123"
    assert channels == frozenset({PRE})
    assert publish_uri == "tcp://*:5554"


def test_resolve_reply_uri():
    assert resolve_reply_uri("tcp://*:5554", "192.168.1.10") == "tcp://192.168.1.10:5554"
    assert resolve_reply_uri("tcp://*:5554", "::1") == "tcp://[::1]:5554"
    assert resolve_reply_uri("tcp://10.0.0.2:5554", "192.168.1.10") == "tcp://10.0.0.2:5554"
    assert resolve_reply_uri("ipc:///tmp/x.sock", None) == "ipc:///tmp/x.sock"


def test_disabled_bridge_has_no_sockets(graph):
    bridge = start_bridge(NetworkConfig.empty(), graph)
    assert not bridge.enabled
    assert bridge.publish_uri is None
    bridge.publish_outbound("pre_channel", b"x")
    assert bridge.stats().frames_sent == 0
    bridge.close()


@pytest.mark.parametrize("scheme", ["tcp", "ipc"])
def test_loopback_delivery(graph, tmp_path, scheme):
    uri = "tcp://127.0.0.1:0" if scheme == "tcp" else f"ipc://{tmp_path}/pub.sock"
    codecs = default_codecs()
    received = []
    with _publisher(graph, uri) as pub:
        with _subscriber(graph, pub.publish_uri, received) as sub:
            assert pub.wait_for_peers("pre_channel", 1, timeout=10.0)
            for i in range(10):
                pub.publish_outbound("pre_channel", codecs.serialize("bytes", bytes([i]) * 10))
            assert _wait_until(lambda: len(received) == 10)
            assert received == [bytes([i]) * 10 for i in range(10)]
            assert sub.stats().frames_received == 10
            assert pub.stats().frames_sent == 10
            assert pub.stats().bytes_sent == sub.stats().bytes_received


def test_four_megabyte_payload_over_tcp(graph):
    codecs = default_codecs()
    payload = random.Random(4).randbytes(4 * 1024 * 1024)
    received = []
    with _publisher(graph) as pub:
        with _subscriber(graph, pub.publish_uri, received):
            assert pub.wait_for_peers("pre_channel", 1, timeout=10.0)
            pub.publish_outbound("pre_channel", codecs.serialize("bytes", payload))
            assert _wait_until(lambda: len(received) == 1, timeout=20.0)
            assert received[0] == payload


def test_unexported_channel_never_touches_network(graph):
    with _publisher(graph) as pub:
        pub.publish_outbound("not_exported", b"x")
        assert pub.stats() == type(pub.stats())()


def test_no_peer_drops_frame(graph):
    with _publisher(graph) as pub:
        pub.publish_outbound("pre_channel", b"x")
        assert pub.stats().frames_dropped == 1
        assert pub.stats().frames_sent == 0


def test_corrupted_frames_are_discarded_in_stream(graph):
    """1000 frames, 300 corrupted: exactly the 700 valid payloads arrive, in order."""
    rng = random.Random(30)
    codecs = default_codecs()
    corrupt = set(rng.sample(range(1000), 300))
    server = listen(parse_endpoint("tcp://127.0.0.1:0", allow_wildcard=True))
    uri = f"tcp://127.0.0.1:{server.getsockname()[1]}"
    received = []
    sub = _subscriber(graph, uri, received, tag="int")
    try:
        server.settimeout(10.0)
        conn, _ = server.accept()
        stream = FramedStream(conn)
        channel, _ = unpack(stream.recv_frame())
        assert channel == SUBSCRIBE_CHANNEL
        expected = []
        for i in range(1000):
            frame = bytearray(pack(PRE, codecs.serialize("int", i)))
            if i in corrupt:
                kind = i % 4
                if kind == 0:
                    frame[4] ^= 0xFF                      # separator
                elif kind == 1:
                    frame = frame[:3]                     # truncated header
                elif kind == 2:
                    frame[6] = 0xFF                       # invalid utf-8 channel byte
                else:
                    frame = frame[:-1]                    # int codec rejects 7 bytes
            else:
                expected.append(i)
            stream.send_frame(bytes(frame))
        assert _wait_until(lambda: sub.stats().frames_received == 1000)
        assert graph.wait_idle(timeout=10.0)
        assert received == expected
        assert len(received) == 700
        assert sub.stats().frames_discarded == 300
        counts = sub.discard_counts()
        assert sum(counts.values()) == 300
        assert set(counts) == {
            DiscardReason.BAD_SEPARATOR,
            DiscardReason.TRUNCATED_HEADER,
            DiscardReason.BAD_UTF8,
            DiscardReason.DESERIALIZE_FAILED,
        }
        conn.close()
    finally:
        sub.close()
        server.close()


def test_dispatch_inbound_outcomes(graph):
    bindings = ChannelBindings()
    bindings.bind(PRE, "int")
    got = []
    graph.from_graph(PRE, InvokeType.SERIAL, got.append)
    bridge = NetworkBridge(NetworkConfig.empty(), graph, bindings=bindings)
    bridge.dispatch_inbound(pack(PRE, (5).to_bytes(8, "little")))
    bridge.dispatch_inbound(pack("unbound", b"x"))
    bridge.dispatch_inbound(b"garbage")
    bridge.dispatch_inbound(pack(PRE, b"short"))
    assert graph.wait_idle(timeout=5.0)
    assert got == [5]
    stats = bridge.stats()
    assert stats.frames_received == 4
    assert stats.frames_unrouted == 1
    assert stats.frames_discarded == 2
    assert bridge.discard_counts() == {DiscardReason.BAD_SEPARATOR: 1, DiscardReason.DESERIALIZE_FAILED: 1}


def test_subscriber_reconnects_when_publisher_appears(graph, port):
    uri = f"tcp://127.0.0.1:{port}"
    received = []
    with _subscriber(graph, uri, received) as sub:
        time.sleep(0.2)
        assert not sub.wait_connected(timeout=0.0)
        with _publisher(graph, uri) as pub:
            assert sub.wait_connected(timeout=10.0)
            assert pub.wait_for_peers("pre_channel", 1, timeout=10.0)
            pub.publish_outbound("pre_channel", default_codecs().serialize("bytes", b"first"))
            assert _wait_until(lambda: received == [b"first"])
        # publisher restarts on the same port; the link resubscribes
        with _publisher(graph, uri) as pub2:
            assert pub2.wait_for_peers("pre_channel", 1, timeout=10.0)
            pub2.publish_outbound("pre_channel", default_codecs().serialize("bytes", b"second"))
            assert _wait_until(lambda: received == [b"first", b"second"])


def test_bind_failure_when_port_taken(graph, port):
    uri = f"tcp://127.0.0.1:{port}"
    with _publisher(graph, uri):
        with pytest.raises(BindFailure):
            _publisher(graph, uri)


def test_self_subscription_is_suppressed(graph, port):
    uri = f"tcp://127.0.0.1:{port}"
    got = []
    graph.from_graph(PRE, InvokeType.SERIAL, got.append)
    bindings = ChannelBindings()
    bindings.bind(PRE, "bytes")
    cfg = _config(publish=uri, exports=["pre_channel"], subscribe=uri, imports=["pre_channel"])
    with NetworkBridge(cfg, graph, bindings=bindings, backoff_factory=_fast_backoff).start() as bridge:
        assert bridge.wait_connected(timeout=10.0)
        assert bridge.wait_for_peers(None, 1, timeout=10.0)
        bridge.publish_outbound("pre_channel", default_codecs().serialize("bytes", b"echo?"))
        time.sleep(0.2)
        assert graph.wait_idle(timeout=5.0)
        assert got == []
        assert bridge.stats().frames_dropped == 1


def test_oversized_stream_prefix_counts_as_oversized_discard(graph):
    server = listen(parse_endpoint("tcp://127.0.0.1:0", allow_wildcard=True))
    uri = f"tcp://127.0.0.1:{server.getsockname()[1]}"
    received = []
    sub = _subscriber(graph, uri, received)
    try:
        server.settimeout(10.0)
        conn, _ = server.accept()
        FramedStream(conn).recv_frame()
        conn.sendall(STREAM_PREFIX.pack(0xFFFFFFFF))
        assert _wait_until(lambda: sub.discard_counts().get(DiscardReason.OVERSIZED) == 1)
        assert sub.stats().frames_discarded == 1
        # the link drops the poisoned stream and dials again
        again, _ = server.accept()
        again.close()
        conn.close()
        assert received == []
    finally:
        sub.close()
        server.close()


def test_publisher_subscribes_back_to_advertised_uri(graph):
    """A publish-only bridge reaches a subscriber's own publisher through the handshake."""
    back = ChannelId("back_channel")
    got = []
    bindings = ChannelBindings()
    bindings.bind(back, "bytes")
    graph.from_graph(back, InvokeType.SERIAL, got.append)
    seen = []
    with NetworkBridge(_config(publish="tcp://127.0.0.1:0", exports=["pre_channel"]), graph,
                       bindings=bindings, backoff_factory=_fast_backoff).start() as echo:

        def follow(info):
            seen.append(info)
            echo.add_subscription(info.publish_uri, [back])

        echo.on_peer(follow)
        cfg = _config(publish="tcp://*:0", exports=["back_channel"], subscribe=echo.publish_uri, imports=["pre_channel"])
        with NetworkBridge(cfg, graph, backoff_factory=_fast_backoff).start() as sender:
            assert sender.advertise_uri.startswith("tcp://*:")
            assert sender.wait_for_peers("back_channel", 1, timeout=10.0)
            assert seen[0].publish_uri == f"tcp://127.0.0.1:{sender.advertise_uri.rsplit(':', 1)[1]}"
            assert seen[0].instance_id == sender.instance_id
            assert echo.wait_connected(timeout=10.0)
            assert not echo.add_subscription(seen[0].publish_uri, [back])
            sender.publish_outbound(back, default_codecs().serialize("bytes", b"hello"))
            assert _wait_until(lambda: got == [b"hello"])
