"""
network_setting.yaml schema:

    network:
      publisher:
        ip: "tcp://*:5553"
        channels: [pre_channel]
      subscribers:
        - ip: "tcp://192.168.1.20:5553"
          channels: [next_channel]

A missing `network` section means pure intra-process operation.
"""

from __future__ import annotations
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Tuple

from graphbus.core.config import load_yaml
from graphbus.core.errors import ConfigParseError, InvalidChannel, InvalidUri
from graphbus.core.types import ChannelId, ChannelLike, as_channel

SCHEMES = ("tcp", "ipc")
_TCP_RE = re.compile(r"^tcp://(?P<host>\*|\[[0-9A-Fa-f:.]+\]|[^\s:/\[\]]+):(?P<port>\d{1,5})$")


@dataclass(frozen=True)
class Endpoint:
    """Parsed transport URI: tcp://host:port or ipc://<socket path>."""
    uri: str
    scheme: str
    host: str = ""
    port: int = 0
    path: str = ""

    @property
    def wildcard(self) -> bool:
        return self.host == "*"

    @property
    def bind_host(self) -> str:
        if self.wildcard:
            return "0.0.0.0"
        return self.host.strip("[]")

    @property
    def connect_host(self) -> str:
        return self.host.strip("[]")

    def __str__(self) -> str:
        return self.uri


def parse_endpoint(uri: Any, allow_wildcard: bool = False, field: Optional[str] = None, source: Optional[str] = None) -> Endpoint:
    """Parse and validate an endpoint URI. Raises InvalidUri."""
    if not isinstance(uri, str) or not uri.strip():
        raise InvalidUri("endpoint must be a non-empty string", source, field=field)
    uri = uri.strip()
    scheme, sep, rest = uri.partition("://")
    if not sep:
        raise InvalidUri(
            f"{uri!r} is not an endpoint URI (placeholder?); expected tcp://host:port or ipc://path",
            source, field=field,
        )
    if scheme not in SCHEMES:
        raise InvalidUri(f"unsupported scheme {scheme!r} in {uri!r}; expected one of {SCHEMES}", source, field=field)
    if scheme == "ipc":
        if not rest:
            raise InvalidUri(f"{uri!r} has no socket path", source, field=field)
        return Endpoint(uri=uri, scheme="ipc", path=rest)
    m = _TCP_RE.match(uri)
    if not m:
        raise InvalidUri(f"{uri!r} does not match tcp://host:port", source, field=field)
    host, port = m.group("host"), int(m.group("port"))
    if port > 65535:
        raise InvalidUri(f"port {port} out of range in {uri!r}", source, field=field)
    if host == "*" and not allow_wildcard:
        raise InvalidUri(f"wildcard host in {uri!r} is only valid for the publisher", source, field=field)
    if port == 0 and not allow_wildcard:
        raise InvalidUri(f"port 0 in {uri!r} is only valid for the publisher", source, field=field)
    return Endpoint(uri=uri, scheme="tcp", host=host, port=port)


@dataclass(frozen=True)
class PublisherConfig:
    endpoint: Endpoint
    channels: Tuple[ChannelId, ...] = ()


@dataclass(frozen=True)
class SubscriberConfig:
    endpoint: Endpoint
    channels: Tuple[ChannelId, ...] = ()


@dataclass(frozen=True)
class NetworkConfig:
    """Static routing table: one publisher endpoint, any number of subscriptions."""
    publisher: Optional[PublisherConfig] = None
    subscribers: Tuple[SubscriberConfig, ...] = ()

    @property
    def enabled(self) -> bool:
        return self.publisher is not None or bool(self.subscribers)

    def exports(self, channel: ChannelLike) -> bool:
        return self.publisher is not None and as_channel(channel) in self.publisher.channels

    @classmethod
    def empty(cls) -> "NetworkConfig":
        return cls()


def _channels(raw: Any, field: str, source: str, unique: bool) -> Tuple[ChannelId, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ConfigParseError("channels must be a list", source, field=field)
    out: list[ChannelId] = []
    for i, name in enumerate(raw):
        try:
            ch = ChannelId(str(name) if isinstance(name, (int, float)) else name)
        except InvalidChannel as e:
            raise ConfigParseError(str(e), source, field=f"{field}[{i}]") from e
        if ch in out:
            if unique:
                raise ConfigParseError(f"duplicate channel {ch.name!r}", source, field=f"{field}[{i}]")
            continue
        out.append(ch)
    return tuple(out)


def _endpoint_of(block: dict, field: str, source: str, allow_wildcard: bool) -> Endpoint:
    uri = block.get("ip", block.get("endpoint"))
    if uri is None:
        raise ConfigParseError("missing 'ip'", source, field=f"{field}.ip")
    return parse_endpoint(uri, allow_wildcard=allow_wildcard, field=f"{field}.ip", source=source)


def network_config_from_mapping(data: Any, source: str = "<config>") -> NetworkConfig:
    """Validate an already-parsed document."""
    if data is None:
        return NetworkConfig.empty()
    if not isinstance(data, dict):
        raise ConfigParseError("top level must be a mapping", source)
    network = data.get("network")
    if network is None:
        return NetworkConfig.empty()
    if not isinstance(network, dict):
        raise ConfigParseError("must be a mapping", source, field="network")

    publisher = None
    pub = network.get("publisher")
    if pub is not None:
        if not isinstance(pub, dict):
            raise ConfigParseError("must be a mapping", source, field="network.publisher")
        publisher = PublisherConfig(
            endpoint=_endpoint_of(pub, "network.publisher", source, allow_wildcard=True),
            channels=_channels(pub.get("channels"), "network.publisher.channels", source, unique=True),
        )

    subscribers = []
    subs = network.get("subscribers") or []
    if not isinstance(subs, list):
        raise ConfigParseError("must be a list", source, field="network.subscribers")
    for i, sub in enumerate(subs):
        field = f"network.subscribers[{i}]"
        if not isinstance(sub, dict):
            raise ConfigParseError("must be a mapping", source, field=field)
        subscribers.append(SubscriberConfig(
            endpoint=_endpoint_of(sub, field, source, allow_wildcard=False),
            channels=_channels(sub.get("channels"), f"{field}.channels", source, unique=False),
        ))
    return NetworkConfig(publisher=publisher, subscribers=tuple(subscribers))


def load_network_config(path: Path) -> NetworkConfig:
    """Load network_setting.yaml. Raises ConfigParseError / InvalidUri."""
    return network_config_from_mapping(load_yaml(Path(path)), source=str(path))
