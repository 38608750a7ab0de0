"""
Benchmark wire objects: timestamped packets, their codec, and the generated network settings.
"""

from __future__ import annotations
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional

import yaml

from graphbus.core.config import NETWORK_FILE
from graphbus.core.errors import CodecError
from graphbus.core.types import ChannelId
from graphbus.messaging.codecs import Codec, CodecRegistry, default_codecs

DATA_CHANNEL = ChannelId("bench_data")
ECHO_CHANNEL = ChannelId("bench_echo")
PACKET_TAG = "bench_packet"

_HEADER = struct.Struct("<Qq")


@dataclass(frozen=True)
class BenchPacket:
    seq: int
    sent_ns: int
    data: bytes


class BenchPacketCodec(Codec):
    """u64 seq, i64 sent_ns (sender clock), then the payload bytes."""

    type_tag = PACKET_TAG
    python_types = (BenchPacket,)

    def serialize(self, value: Any) -> bytes:
        if not isinstance(value, BenchPacket):
            raise CodecError(f"expected BenchPacket, got {type(value).__name__}")
        return _HEADER.pack(value.seq, value.sent_ns) + bytes(value.data)

    def deserialize(self, data: bytes) -> BenchPacket:
        if len(data) < _HEADER.size:
            raise CodecError(f"bench packet too short ({len(data)} bytes)")
        seq, sent_ns = _HEADER.unpack_from(data)
        return BenchPacket(seq, sent_ns, bytes(data[_HEADER.size:]))


def bench_codecs() -> CodecRegistry:
    registry = default_codecs()
    registry.register(PACKET_TAG, BenchPacketCodec())
    return registry


def write_network_setting(
    directory: Path,
    listen: str,
    exports: Iterable[ChannelId],
    peer: Optional[str],
    imports: Iterable[ChannelId],
) -> Path:
    """Write a network_setting.yaml for one benchmark end."""
    network: dict = {"publisher": {"ip": listen, "channels": [c.name for c in exports]}}
    if peer:
        network["subscribers"] = [{"ip": peer, "channels": [c.name for c in imports]}]
    path = Path(directory) / NETWORK_FILE
    path.write_text(yaml.safe_dump({"network": network}, sort_keys=False), encoding="utf-8")
    return path
