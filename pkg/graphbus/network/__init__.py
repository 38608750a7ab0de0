"""Network: config-driven bridge between process-local graphs."""

from graphbus.network.config import (
    Endpoint,
    NetworkConfig,
    PublisherConfig,
    SubscriberConfig,
    load_network_config,
    network_config_from_mapping,
    parse_endpoint,
)
from graphbus.network.backoff import ReconnectBackoff
from graphbus.network.bridge import BridgeStats, NetworkBridge, PeerInfo, start_bridge

__all__ = [
    "Endpoint",
    "NetworkConfig",
    "PublisherConfig",
    "SubscriberConfig",
    "load_network_config",
    "network_config_from_mapping",
    "parse_endpoint",
    "ReconnectBackoff",
    "BridgeStats",
    "NetworkBridge",
    "PeerInfo",
    "start_bridge",
]
