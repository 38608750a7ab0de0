"""
Network bridge: the per-process edge between the local graph and remote ones.

Publisher side: binds one endpoint, accepts peers, and after each peer's
subscription handshake forwards frames for the channels it asked for.
Subscriber side: one link per configured endpoint, reconnecting with backoff,
feeding every received frame to dispatch_inbound.

Handshake = one frame on channel "__subscribe" whose payload is
"instance <hex id>", an optional "publish <uri>" naming the subscriber's own
publisher, then newline-separated channel names. A publisher can use that
URI to subscribe back (see NetworkBridge.on_peer / add_subscription).
"""

from __future__ import annotations
import logging
import os
import socket
import threading
import time
import uuid
from collections import Counter, deque
from dataclasses import asdict, dataclass
from typing import Callable, Deque, Dict, FrozenSet, Iterable, List, NamedTuple, Optional

from graphbus.core.errors import GraphShutDown
from graphbus.core.types import ChannelId, ChannelLike, DiscardReason, as_channel
from graphbus.graph.runtime import GraphRuntime
from graphbus.messaging.codecs import ChannelBindings, CodecRegistry, default_codecs
from graphbus.messaging.wire import pack, unpack
from graphbus.network.backoff import ReconnectBackoff
from graphbus.network.config import Endpoint, NetworkConfig, SubscriberConfig, parse_endpoint
from graphbus.network.transport import FramedStream, StreamCorrupted, bound_uri, connect, listen, tune

logger = logging.getLogger("graphbus.network.bridge")

SUBSCRIBE_CHANNEL = ChannelId("__subscribe")
PEER_QUEUE_LIMIT = 1024
CONNECT_TIMEOUT = 2.0
_INSTANCE_PREFIX = "instance "
_PUBLISH_PREFIX = "publish "


@dataclass(frozen=True)
class BridgeStats:
    """Monotonic counters. bytes_* include the 4-byte stream prefix of each frame."""
    frames_sent: int = 0
    frames_received: int = 0
    frames_discarded: int = 0
    frames_unrouted: int = 0
    frames_dropped: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0


class Handshake(NamedTuple):
    instance_id: Optional[str]
    channels: FrozenSet[ChannelId]
    publish_uri: Optional[str] = None


class PeerInfo(NamedTuple):
    """What a publisher learned from one subscriber's handshake."""
    name: str
    instance_id: Optional[str]
    channels: FrozenSet[ChannelId]
    publish_uri: Optional[str]


def encode_handshake(instance_id: str, channels: Iterable[ChannelLike], publish_uri: Optional[str] = None) -> bytes:
    lines = [_INSTANCE_PREFIX + instance_id]
    if publish_uri:
        lines.append(_PUBLISH_PREFIX + publish_uri)
    lines += [as_channel(c).name for c in channels]
    return pack(SUBSCRIBE_CHANNEL, "\n".join(lines).encode("utf-8"))


def decode_handshake(data: bytes) -> Handshake:
    """Raises ValueError on garbage."""
    instance_id = None
    publish_uri = None
    channels = set()
    for line in data.decode("utf-8").split("\n"):
        if not line:
            continue
        if line.startswith(_INSTANCE_PREFIX):
            instance_id = line[len(_INSTANCE_PREFIX):].strip()
        elif line.startswith(_PUBLISH_PREFIX):
            publish_uri = line[len(_PUBLISH_PREFIX):].strip() or None
        else:
            channels.add(ChannelId(line))
    return Handshake(instance_id, frozenset(channels), publish_uri)


def resolve_reply_uri(advertised: str, remote_host: Optional[str]) -> str:
    """A wildcard tcp host in an advertised URI means "the address you saw me connect from"."""
    prefix = "tcp://*:"
    if advertised.startswith(prefix) and remote_host:
        host = f"[{remote_host}]" if ":" in remote_host else remote_host
        return f"tcp://{host}:{advertised[len(prefix):]}"
    return advertised


def _advertised(listener: socket.socket, endpoint: Endpoint, publish_uri: str) -> str:
    if endpoint.scheme == "tcp" and endpoint.wildcard:
        return f"tcp://*:{listener.getsockname()[1]}"
    return publish_uri


class _Peer:
    """One accepted subscriber connection: handshake reader + bounded writer queue."""

    def __init__(self, bridge: "NetworkBridge", stream: FramedStream, name: str, remote_host: Optional[str] = None):
        self.bridge = bridge
        self.stream = stream
        self.name = name
        self.remote_host = remote_host
        self.publish_uri: Optional[str] = None
        self.channels: FrozenSet[ChannelId] = frozenset()
        self.instance_id: Optional[str] = None
        self.queue: Deque[bytes] = deque()
        self.cv = threading.Condition()
        self.closed = False

    def start(self) -> None:
        threading.Thread(target=self._read_loop, name=f"graphbus-peer-rx-{self.name}", daemon=True).start()
        threading.Thread(target=self._write_loop, name=f"graphbus-peer-tx-{self.name}", daemon=True).start()

    def enqueue(self, frame: bytes) -> None:
        dropped = 0
        with self.cv:
            if self.closed:
                return
            if len(self.queue) >= self.bridge.queue_limit:
                self.queue.popleft()
                dropped = 1
            self.queue.append(frame)
            self.cv.notify()
        if dropped:
            self.bridge._count(frames_dropped=1)
            logger.debug("Peer %s send queue full; dropped oldest frame", self.name)

    def close(self) -> None:
        with self.cv:
            if self.closed:
                return
            self.closed = True
            self.queue.clear()
            self.cv.notify_all()
        self.stream.close()
        self.bridge._remove_peer(self)

    def _read_loop(self) -> None:
        try:
            while True:
                frame = self.stream.recv_frame()
                if frame is None:
                    break
                self._on_control(frame)
        except (OSError, StreamCorrupted) as e:
            logger.debug("Peer %s read ended: %s", self.name, e)
        finally:
            logger.info("Peer %s disconnected", self.name)
            self.close()

    def _on_control(self, frame: bytes) -> None:
        result = unpack(frame)
        if isinstance(result, DiscardReason) or result[0] != SUBSCRIBE_CHANNEL:
            logger.debug("Peer %s sent a non-handshake frame; ignored", self.name)
            return
        try:
            instance_id, channels, advertised = decode_handshake(result[1])
        except ValueError as e:
            logger.warning("Peer %s sent a malformed handshake: %s", self.name, e)
            return
        if advertised:
            self.publish_uri = resolve_reply_uri(advertised, self.remote_host)
        self.instance_id = instance_id
        if instance_id is not None and instance_id == self.bridge.instance_id:
            logger.info("Peer %s is this process; suppressing self-delivery", self.name)
            self.channels = frozenset()
        else:
            self.channels = channels
            logger.info("Peer %s subscribed to %s", self.name, sorted(c.name for c in channels))
        self.bridge._peers_changed()
        if self.channels:
            self.bridge._notify_peer(PeerInfo(self.name, instance_id, self.channels, self.publish_uri))

    def _write_loop(self) -> None:
        while True:
            with self.cv:
                while not self.queue and not self.closed:
                    self.cv.wait()
                if self.closed:
                    return
                frame = self.queue.popleft()
            try:
                written = self.stream.send_frame(frame)
            except OSError as e:
                logger.info("Peer %s write failed: %s", self.name, e)
                self.close()
                return
            self.bridge._count(frames_sent=1, bytes_sent=written)


class _SubscriptionLink:
    """Connects to one remote publisher, resubscribing after every reconnect."""

    def __init__(self, bridge: "NetworkBridge", config: SubscriberConfig):
        self.bridge = bridge
        self.config = config
        self.connected = threading.Event()
        self._stream: Optional[FramedStream] = None
        self._thread = threading.Thread(
            target=self._run, name=f"graphbus-sub-{config.endpoint.uri}", daemon=True
        )

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        stream = self._stream
        if stream is not None:
            stream.close()

    def join(self, timeout: float) -> None:
        self._thread.join(timeout)

    def _run(self) -> None:
        backoff = self.bridge.backoff_factory()
        endpoint = self.config.endpoint
        handshake = encode_handshake(self.bridge.instance_id, self.config.channels, self.bridge.advertise_uri)
        stop = self.bridge._stop
        while not stop.is_set():
            try:
                sock = connect(endpoint, timeout=CONNECT_TIMEOUT)
            except OSError as e:
                delay = backoff.next_delay()
                logger.info("Connect to %s failed (%s); retry in %.2fs", endpoint.uri, e, delay)
                if stop.wait(delay):
                    return
                continue
            backoff.reset()
            stream = FramedStream(sock)
            self._stream = stream
            if stop.is_set():
                stream.close()
                return
            try:
                stream.send_frame(handshake)
                self.connected.set()
                logger.info("Subscribed to %s", endpoint.uri)
                while True:
                    frame = stream.recv_frame()
                    if frame is None:
                        break
                    self.bridge.dispatch_inbound(frame, wire_bytes=len(frame) + 4)
            except StreamCorrupted as e:
                self.bridge._count(frames_received=1)
                self.bridge._discard(DiscardReason.OVERSIZED)
                logger.warning("Stream from %s corrupted (%s); reconnecting", endpoint.uri, e)
            except OSError as e:
                if not stop.is_set():
                    logger.info("Link to %s lost: %s", endpoint.uri, e)
            finally:
                self.connected.clear()
                self._stream = None
                stream.close()
            if stop.wait(backoff.next_delay()):
                return


class NetworkBridge:
    """
    Handle returned by start_bridge. An empty NetworkConfig gives a disabled
    bridge with no sockets; publish_outbound is then a no-op.
    """

    def __init__(
        self,
        config: NetworkConfig,
        graph: GraphRuntime,
        codecs: Optional[CodecRegistry] = None,
        bindings: Optional[ChannelBindings] = None,
        instance_id: Optional[str] = None,
        queue_limit: int = PEER_QUEUE_LIMIT,
        backoff_factory: Callable[[], ReconnectBackoff] = ReconnectBackoff,
    ):
        self.config = config
        self.graph = graph
        self.codecs = codecs or default_codecs()
        self.bindings = bindings or ChannelBindings()
        self.instance_id = instance_id or uuid.uuid4().hex
        self.queue_limit = queue_limit
        self.backoff_factory = backoff_factory
        self.publish_uri: Optional[str] = None
        self.advertise_uri: Optional[str] = None
        self._exported = frozenset(config.publisher.channels) if config.publisher else frozenset()
        self._listener: Optional[socket.socket] = None
        self._peers: List[_Peer] = []
        self._peers_cv = threading.Condition()
        self._links: List[_SubscriptionLink] = []
        self._links_lock = threading.Lock()
        self._peer_listeners: List[Callable[[PeerInfo], None]] = []
        self._threads: List[threading.Thread] = []
        self._stop = threading.Event()
        self._stats_lock = threading.Lock()
        self._stats = asdict(BridgeStats())
        self._discards: Counter = Counter()
        self._started = False

    @property
    def enabled(self) -> bool:
        return self.config.enabled

    def start(self) -> "NetworkBridge":
        """Bind the publisher (BindFailure on error) and launch subscriber links."""
        if self._started:
            return self
        self._started = True
        pub = self.config.publisher
        if pub is not None:
            self._listener = listen(pub.endpoint)
            self._listener.settimeout(0.2)
            self.publish_uri = bound_uri(self._listener, pub.endpoint)
            self.advertise_uri = _advertised(self._listener, pub.endpoint, self.publish_uri)
            t = threading.Thread(target=self._accept_loop, name="graphbus-accept", daemon=True)
            t.start()
            self._threads.append(t)
            logger.info("Publisher bound on %s exporting %s", self.publish_uri, [c.name for c in pub.channels])
        for sub in self.config.subscribers:
            self._start_link(sub)
        return self

    def on_peer(self, listener: Callable[[PeerInfo], None]) -> None:
        """
        Call listener after each non-self subscriber handshake, on that peer's
        reader thread. Peers that already handshook are replayed immediately.
        """
        with self._peers_cv:
            self._peer_listeners.append(listener)
            known = [
                PeerInfo(p.name, p.instance_id, p.channels, p.publish_uri)
                for p in self._peers
                if p.instance_id is not None and p.channels
            ]
        for info in known:
            listener(info)

    def add_subscription(self, uri: str, channels: Iterable[ChannelLike]) -> bool:
        """
        Open a subscriber link at runtime. False if the bridge is closed or a
        link to the same URI already exists. Raises InvalidUri.
        """
        sub = SubscriberConfig(
            endpoint=parse_endpoint(uri, field="subscription"),
            channels=tuple(as_channel(c) for c in channels),
        )
        started = self._start_link(sub)
        if started:
            logger.info("Added subscription to %s for %s", uri, [c.name for c in sub.channels])
        return started

    def discard_counts(self) -> Dict[DiscardReason, int]:
        with self._stats_lock:
            return dict(self._discards)

    def exports(self, channel: ChannelLike) -> bool:
        return as_channel(channel) in self._exported

    def publish_outbound(self, channel: ChannelLike, data_string: bytes) -> None:
        """Fire-and-forget. Unexported channels never touch the network."""
        ch = as_channel(channel)
        if ch not in self._exported:
            return
        with self._peers_cv:
            targets = [p for p in self._peers if ch in p.channels]
        if not targets:
            self._count(frames_dropped=1)
            return
        frame = pack(ch, data_string)
        for peer in targets:
            peer.enqueue(frame)

    def dispatch_inbound(self, frame: bytes, wire_bytes: Optional[int] = None) -> None:
        """Unpack, deserialize and inject into the local graph. Never raises."""
        self._count(frames_received=1, bytes_received=len(frame) if wire_bytes is None else wire_bytes)
        try:
            result = unpack(frame)
            if isinstance(result, DiscardReason):
                self._discard(result)
                logger.debug("Discarded inbound frame (%s, %d bytes)", result.value, len(frame))
                return
            channel, data = result
            type_tag = self.bindings.get(channel)
            if type_tag is None:
                self._count(frames_unrouted=1)
                logger.debug("No local binding for %s; frame unrouted", channel)
                return
            try:
                value = self.codecs.deserialize(type_tag, data)
            except Exception as e:
                self._discard(DiscardReason.DESERIALIZE_FAILED)
                logger.debug("Discarded frame on %s (%s): %s", channel, DiscardReason.DESERIALIZE_FAILED.value, e)
                return
            self.graph.to_graph(channel, value)
        except GraphShutDown:
            self._count(frames_dropped=1)
        except Exception:
            self._count(frames_discarded=1)
            logger.exception("Unexpected error dispatching inbound frame")

    def stats(self) -> BridgeStats:
        with self._stats_lock:
            return BridgeStats(**self._stats)

    def wait_for_peers(self, channel: Optional[ChannelLike] = None, count: int = 1, timeout: Optional[float] = None) -> bool:
        """Block until `count` peers have handshaken (for `channel`, if given)."""
        ch = as_channel(channel) if channel is not None else None

        def ready() -> bool:
            return sum(1 for p in self._peers if p.instance_id is not None and (ch is None or ch in p.channels)) >= count

        with self._peers_cv:
            return self._peers_cv.wait_for(ready, timeout)

    def wait_connected(self, timeout: Optional[float] = None) -> bool:
        """Block until every subscriber link is connected."""
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._links_lock:
            links = list(self._links)
        for link in links:
            remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
            if not link.connected.wait(remaining):
                return False
        return True

    def close(self) -> None:
        with self._links_lock:
            if self._stop.is_set():
                return
            self._stop.set()
            links = list(self._links)
        if self._listener is not None:
            self._listener.close()
        for link in links:
            link.stop()
        with self._peers_cv:
            peers = list(self._peers)
        for peer in peers:
            peer.close()
        for t in self._threads:
            t.join(1.0)
        for link in links:
            link.join(1.0)
        pub = self.config.publisher
        if pub is not None and pub.endpoint.scheme == "ipc" and self._listener is not None:
            try:
                os.unlink(pub.endpoint.path)
            except OSError:
                pass
        logger.debug("Bridge closed")

    def __enter__(self) -> "NetworkBridge":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    # ------------------------------------------------------------------ #

    def _accept_loop(self) -> None:
        assert self._listener is not None
        n = 0
        while not self._stop.is_set():
            try:
                sock, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                if not self._stop.is_set():
                    logger.exception("Accept failed on %s", self.publish_uri)
                return
            sock.settimeout(None)
            tune(sock)
            n += 1
            remote = addr[0] if isinstance(addr, tuple) else None
            label = f"{addr[0]}:{addr[1]}" if remote else "ipc"
            peer = _Peer(self, FramedStream(sock), f"{label}#{n}", remote)
            with self._peers_cv:
                self._peers.append(peer)
            peer.start()

    def _start_link(self, sub: SubscriberConfig) -> bool:
        with self._links_lock:
            if self._stop.is_set() or any(link.config.endpoint.uri == sub.endpoint.uri for link in self._links):
                return False
            new_link = _SubscriptionLink(self, sub)
            self._links.append(new_link)
        new_link.start()
        return True

    def _remove_peer(self, peer: _Peer) -> None:
        with self._peers_cv:
            if peer in self._peers:
                self._peers.remove(peer)
            self._peers_cv.notify_all()

    def _peers_changed(self) -> None:
        with self._peers_cv:
            self._peers_cv.notify_all()

    def _count(self, **deltas: int) -> None:
        with self._stats_lock:
            for key, value in deltas.items():
                self._stats[key] += value

    def _discard(self, reason: DiscardReason) -> None:
        with self._stats_lock:
            self._stats["frames_discarded"] += 1
            self._discards[reason] += 1

    def _notify_peer(self, info: PeerInfo) -> None:
        with self._peers_cv:
            listeners = list(self._peer_listeners)
        for listener in listeners:
            try:
                listener(info)
            except Exception:
                logger.exception("Peer listener failed for %s", info.name)


def start_bridge(
    config: NetworkConfig,
    graph: GraphRuntime,
    codecs: Optional[CodecRegistry] = None,
    bindings: Optional[ChannelBindings] = None,
    instance_id: Optional[str] = None,
) -> NetworkBridge:
    """Create and start a bridge. Raises BindFailure; unreachable subscribe targets retry in background."""
    return NetworkBridge(config, graph, codecs, bindings, instance_id).start()

