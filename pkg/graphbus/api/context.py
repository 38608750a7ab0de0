"""
Unified API: to_any / from_any over the local graph and, when configured, the network.

Application code is identical for local-only, inter-process and cross-device
deployments; only network_setting.yaml differs.
"""

from __future__ import annotations
import logging
import threading
import uuid
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from graphbus.core.config import NETWORK_FILE, PARAMS_FILE, Settings, load_settings
from graphbus.core.errors import ConfigParseError, GraphBusError, MissingCodec
from graphbus.core.types import ChannelLike, Envelope, InvokeType, as_channel
from graphbus.graph.runtime import Callback, GraphRuntime, GraphStats, NodeId
from graphbus.messaging.codecs import ChannelBindings, CodecRegistry, default_codecs
from graphbus.network.bridge import BridgeStats, NetworkBridge
from graphbus.network.config import NetworkConfig, load_network_config
from graphbus.support.clock import TimeSystem
from graphbus.support.params import ParameterStore, load_params
from graphbus.transforms.tree import FrameTree

logger = logging.getLogger("graphbus.api")

_live_lock = threading.Lock()
_live_contexts = 0


class RuntimeContext:
    """One per process: the graph, the bridge, codecs, parameters, clock and transform tree."""

    def __init__(
        self,
        graph: GraphRuntime,
        bridge: NetworkBridge,
        codecs: CodecRegistry,
        bindings: ChannelBindings,
        params: ParameterStore,
        clock: TimeSystem,
        transforms: Optional[FrameTree] = None,
        settings: Optional[Settings] = None,
    ):
        self.graph = graph
        self.bridge = bridge
        self.codecs = codecs
        self.bindings = bindings
        self.params = params
        self.clock = clock
        self.transforms = transforms or FrameTree()
        self.settings = settings
        self._closed = False
        global _live_contexts
        with _live_lock:
            _live_contexts += 1
            if _live_contexts > 1:
                logger.warning("%d runtime contexts alive in this process; expected one", _live_contexts)

    @property
    def instance_id(self) -> str:
        return self.bridge.instance_id

    @property
    def network(self) -> NetworkConfig:
        return self.bridge.config

    def to_any(self, channel: ChannelLike, payload: Any, type_tag: Optional[str] = None) -> Envelope:
        """
        Deliver locally by reference, then serialize once and publish if the channel is exported.
        MissingCodec is raised after local delivery when an exported payload has no codec.
        """
        ch = as_channel(channel)
        envelope = self.graph.to_graph(ch, payload)
        if not self.bridge.exports(ch):
            return envelope
        tag = type_tag or self.bindings.get(ch) or self.codecs.tag_for(payload)
        data = self.codecs.serialize(tag, payload)
        self.bridge.publish_outbound(ch, data)
        return envelope

    def from_any(
        self,
        channel: ChannelLike,
        invoke: Union[InvokeType, str],
        type_tag: str,
        callback: Callback,
        envelope: bool = False,
    ) -> NodeId:
        """Register a node and bind the channel to type_tag for inbound deserialization."""
        ch = as_channel(channel)
        if type_tag not in self.codecs:
            raise MissingCodec(f"no codec registered for type tag {type_tag!r}")
        self.bindings.bind(ch, type_tag)
        return self.graph.from_graph(ch, invoke, callback, envelope=envelope)

    def to_graph(self, channel: ChannelLike, payload: Any) -> Envelope:
        return self.graph.to_graph(channel, payload)

    def from_graph(self, channel: ChannelLike, invoke: Union[InvokeType, str], callback: Callback, envelope: bool = False) -> NodeId:
        return self.graph.from_graph(channel, invoke, callback, envelope=envelope)

    def deregister(self, node_id: NodeId) -> None:
        self.graph.deregister(node_id)

    def wait_idle(self, timeout: Optional[float] = None) -> bool:
        return self.graph.wait_idle(timeout)

    def graph_stats(self) -> GraphStats:
        return self.graph.stats()

    def bridge_stats(self) -> BridgeStats:
        return self.bridge.stats()

    def shutdown(self, timeout: Optional[float] = None) -> None:
        """Close the bridge first so no inbound frame races the graph shutdown."""
        if self._closed:
            return
        self._closed = True
        self.bridge.close()
        self.graph.shutdown(timeout)
        global _live_contexts
        with _live_lock:
            _live_contexts -= 1
        logger.info("Runtime %s shut down", self.instance_id[:8])

    def __enter__(self) -> "RuntimeContext":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.shutdown()


def init_runtime(
    config_dir: Optional[Union[str, Path]] = None,
    overrides: Optional[Iterable[str]] = None,
    codecs: Optional[CodecRegistry] = None,
    virtual_time: bool = False,
    instance_id: Optional[str] = None,
) -> RuntimeContext:
    """
    Build a runtime from a config directory holding optional params.yaml and
    network_setting.yaml. Missing directory or files give a pure intra-process runtime.
    Raises ConfigParseError or BindFailure.
    """
    root = Path(config_dir) if config_dir is not None else None
    params_path = root / PARAMS_FILE if root is not None else None
    network_path = root / NETWORK_FILE if root is not None else None

    params = load_params(params_path) if params_path is not None and params_path.exists() else ParameterStore()
    if overrides:
        params.apply_overrides(overrides)
    settings = load_settings(params)

    if network_path is not None and network_path.exists():
        network = load_network_config(network_path)
    else:
        network = NetworkConfig.empty()

    transforms = FrameTree()
    if "transforms" in params:
        try:
            transforms.load_transforms(params.get_list("transforms"))
        except (GraphBusError, TypeError) as e:
            raise ConfigParseError(str(e), str(params_path or params.source), field="transforms") from e

    codecs = codecs or default_codecs()
    bindings = ChannelBindings()
    graph = GraphRuntime(workers=settings.workers, high_watermark=settings.high_watermark)
    bridge = NetworkBridge(network, graph, codecs, bindings, instance_id or uuid.uuid4().hex)
    try:
        bridge.start()
    except Exception:
        bridge.close()
        graph.shutdown()
        raise

    clock = TimeSystem(virtual=virtual_time)
    clock.set_epoch()
    ctx = RuntimeContext(graph, bridge, codecs, bindings, params, clock, transforms, settings)
    logger.info(
        "Runtime %s started (workers=%d, network=%s)",
        bridge.instance_id[:8], settings.workers, "on" if network.enabled else "off",
    )
    return ctx
