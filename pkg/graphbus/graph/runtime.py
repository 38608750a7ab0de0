"""
In-process computational graph.

Publishing fans a payload out, by reference, to every node registered on the
channel. Callbacks run on a thread pool, never on the publisher's thread.
Serial nodes have a FIFO queue drained by at most one task at a time;
Concurrent nodes get one pool task per delivery.
"""

from __future__ import annotations
import itertools
import logging
import os
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Deque, Dict, NewType, Optional, Tuple, Union

import numpy as np

from graphbus.core.config import DEFAULT_HIGH_WATERMARK
from graphbus.core.errors import GraphShutDown, UnknownNode
from graphbus.core.types import ChannelId, ChannelLike, Envelope, InvokeType, as_channel

logger = logging.getLogger("graphbus.graph")

NodeId = NewType("NodeId", int)
Callback = Callable[[Any], None]

# serial drain tasks yield the worker after this many messages
_DRAIN_BATCH = 64


@dataclass
class GraphStats:
    """Counters since the graph started."""
    published: int = 0
    delivered: int = 0
    unrouted: int = 0
    callback_errors: int = 0


class _Node:
    __slots__ = (
        "node_id", "channel", "invoke", "callback", "envelope",
        "active", "queue", "draining", "in_flight", "over_watermark", "lock", "idle",
    )

    def __init__(self, node_id: NodeId, channel: ChannelId, invoke: InvokeType, callback: Callback, envelope: bool):
        self.node_id = node_id
        self.channel = channel
        self.invoke = invoke
        self.callback = callback
        self.envelope = envelope
        self.active = True
        self.queue: Deque[Envelope] = deque()
        self.draining = False
        self.in_flight = 0
        self.over_watermark = False
        self.lock = threading.Lock()
        self.idle = threading.Condition(self.lock)


def _freeze(payload: Any) -> None:
    """No mutable access is handed out: numpy buffers become read-only in place."""
    if isinstance(payload, np.ndarray) and payload.flags.writeable:
        payload.flags.writeable = False


class GraphRuntime:
    """
    Channel-keyed fan-out over a worker pool.

    Every envelope published is delivered exactly once to every node registered
    on its channel at publish time. Nodes registered later see only later publishes.
    """

    def __init__(
        self,
        workers: Optional[int] = None,
        high_watermark: int = DEFAULT_HIGH_WATERMARK,
        name: str = "graphbus-graph",
    ):
        self.workers = workers or os.cpu_count() or 4
        self.high_watermark = high_watermark
        self._pool = ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix=name)
        self._lock = threading.Lock()
        self._registry: Dict[ChannelId, Tuple[_Node, ...]] = {}
        self._nodes: Dict[NodeId, _Node] = {}
        self._ids = itertools.count(1)
        self._sequences: Dict[ChannelId, "itertools.count[int]"] = {}
        self._pending = 0
        self._pending_cv = threading.Condition()
        self._stats = GraphStats()
        self._closed = False
        self._cancel_concurrent = False
        self._local = threading.local()
        logger.debug("Graph started with %d workers", self.workers)

    # ------------------------------------------------------------------ #
    # Public API
    # ------------------------------------------------------------------ #

    def to_graph(self, channel: ChannelLike, payload: Any) -> Envelope:
        """Publish without waiting for any callback. Zero subscribers is legal."""
        ch = as_channel(channel)
        _freeze(payload)
        with self._lock:
            if self._closed:
                raise GraphShutDown(f"cannot publish on {ch}: graph is shut down")
            nodes = self._registry.get(ch, ())
            sequence = next(self._sequences.setdefault(ch, itertools.count(1)))
            with self._pending_cv:
                self._stats.published += 1
                if nodes:
                    self._pending += len(nodes)
                else:
                    self._stats.unrouted += 1
        envelope = Envelope(ch, payload, sequence)
        for node in nodes:
            self._dispatch(node, envelope)
        return envelope

    def from_graph(
        self,
        channel: ChannelLike,
        invoke: Union[InvokeType, str],
        callback: Callback,
        envelope: bool = False,
    ) -> NodeId:
        """
        Register a node. The callback receives the payload (or the Envelope when
        envelope=True) for every later publish on the channel.
        """
        ch = as_channel(channel)
        mode = InvokeType(invoke)
        if not callable(callback):
            raise TypeError("callback must be callable")
        with self._lock:
            if self._closed:
                raise GraphShutDown(f"cannot register on {ch}: graph is shut down")
            node_id = NodeId(next(self._ids))
            node = _Node(node_id, ch, mode, callback, envelope)
            self._nodes[node_id] = node
            self._registry[ch] = self._registry.get(ch, ()) + (node,)
        logger.debug("Node %d registered on %s (%s)", node_id, ch, mode.value)
        return node_id

    def deregister(self, node_id: NodeId) -> None:
        """
        Remove a node. Queued deliveries are dropped; in-flight callbacks
        finish before this returns (unless called from the node's own callback).
        """
        with self._lock:
            node = self._nodes.pop(node_id, None)
            if node is None:
                raise UnknownNode(f"unknown node id {node_id!r}")
            remaining = tuple(n for n in self._registry.get(node.channel, ()) if n is not node)
            if remaining:
                self._registry[node.channel] = remaining
            else:
                self._registry.pop(node.channel, None)
        own = 1 if getattr(self._local, "node_id", None) == node_id else 0
        with node.lock:
            node.active = False
            dropped = len(node.queue)
            node.queue.clear()
            while node.in_flight > own:
                node.idle.wait()
        if dropped:
            self._finish(dropped)
        logger.debug("Node %d deregistered from %s (%d queued dropped)", node_id, node.channel, dropped)

    def wait_idle(self, timeout: Optional[float] = None) -> bool:
        """True once every queued delivery has completed; False on timeout (seconds)."""
        with self._pending_cv:
            return self._pending_cv.wait_for(lambda: self._pending == 0, timeout)

    def shutdown(self, timeout: Optional[float] = None) -> None:
        """
        Stop accepting publishes, drain Serial queues, cancel Concurrent
        deliveries that have not started, then stop the workers. Idempotent.
        """
        with self._lock:
            if self._closed:
                return
            self._closed = True
            self._cancel_concurrent = True
        if getattr(self._local, "node_id", None) is not None:
            logger.warning("shutdown() called from a callback; not waiting for pending deliveries")
            drained = False
        else:
            drained = self.wait_idle(timeout)
            if not drained:
                logger.warning("Graph shutdown timed out with %d deliveries pending", self.pending)
        self._pool.shutdown(wait=drained, cancel_futures=True)
        logger.debug("Graph shut down")

    @property
    def closed(self) -> bool:
        return self._closed

    @property
    def pending(self) -> int:
        with self._pending_cv:
            return self._pending

    def subscriber_count(self, channel: ChannelLike) -> int:
        return len(self._registry.get(as_channel(channel), ()))

    def stats(self) -> GraphStats:
        with self._pending_cv:
            return replace(self._stats)

    def __enter__(self) -> "GraphRuntime":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.shutdown()

    # ------------------------------------------------------------------ #
    # Scheduling
    # ------------------------------------------------------------------ #

    def _dispatch(self, node: _Node, envelope: Envelope) -> None:
        if node.invoke is InvokeType.CONCURRENT:
            self._submit(self._run_concurrent, node, envelope)
            return
        with node.lock:
            if not node.active:
                accepted = schedule = False
            else:
                accepted = True
                node.queue.append(envelope)
                self._check_watermark(node)
                schedule = not node.draining
                node.draining = True
        if not accepted:
            self._finish(1)
        elif schedule:
            self._submit(self._drain_serial, node)

    def _submit(self, fn: Callable[..., None], *args: Any) -> None:
        try:
            self._pool.submit(fn, *args)
        except RuntimeError:
            # pool already stopped (publish raced shutdown)
            logger.debug("Pool stopped; dropping task for node %d", args[0].node_id)
            if fn is self._drain_serial:
                node = args[0]
                with node.lock:
                    dropped = len(node.queue)
                    node.queue.clear()
                    node.draining = False
                self._finish(dropped)
            else:
                self._finish(1)

    def _drain_serial(self, node: _Node) -> None:
        for _ in range(_DRAIN_BATCH):
            with node.lock:
                if not node.queue:
                    node.draining = False
                    node.idle.notify_all()
                    return
                envelope = node.queue.popleft()
                node.in_flight += 1
            try:
                self._invoke(node, envelope)
            finally:
                with node.lock:
                    node.in_flight -= 1
                    if node.in_flight == 0:
                        node.idle.notify_all()
        # give other nodes a turn; draining stays set so FIFO holds
        self._submit(self._drain_serial, node)

    def _run_concurrent(self, node: _Node, envelope: Envelope) -> None:
        with node.lock:
            start = node.active and not self._cancel_concurrent
            if start:
                node.in_flight += 1
        if not start:
            self._finish(1)
            return
        try:
            self._invoke(node, envelope)
        finally:
            with node.lock:
                node.in_flight -= 1
                if node.in_flight == 0:
                    node.idle.notify_all()

    def _invoke(self, node: _Node, envelope: Envelope) -> None:
        self._local.node_id = node.node_id
        ok = False
        try:
            node.callback(envelope if node.envelope else envelope.payload)
            ok = True
        except BaseException:  # SystemExit and KeyboardInterrupt included
            logger.exception(
                "Callback of node %d on %s raised (seq %d); node stays registered",
                node.node_id, node.channel, envelope.sequence,
            )
        finally:
            self._local.node_id = None
            self._finish(1, delivered=int(ok), errors=int(not ok))

    def _finish(self, count: int, delivered: int = 0, errors: int = 0) -> None:
        with self._pending_cv:
            self._pending -= count
            self._stats.delivered += delivered
            self._stats.callback_errors += errors
            if self._pending == 0:
                self._pending_cv.notify_all()

    def _check_watermark(self, node: _Node) -> None:
        depth = len(node.queue)
        if not node.over_watermark and depth >= self.high_watermark:
            node.over_watermark = True
            logger.warning(
                "Node %d on %s has %d queued envelopes (high watermark %d)",
                node.node_id, node.channel, depth, self.high_watermark,
            )
        elif node.over_watermark and depth < self.high_watermark // 2:
            node.over_watermark = False
