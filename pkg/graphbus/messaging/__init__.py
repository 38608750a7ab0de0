"""Messaging: wire framing and serialization codecs."""

from graphbus.messaging.wire import pack, unpack, frame_for_stream, HEADER_SEPARATOR, MAX_PAYLOAD
from graphbus.messaging.codecs import (
    Codec,
    CodecRegistry,
    BytesCodec,
    IntCodec,
    MsgpackCodec,
    NdarrayCodec,
    ChannelBindings,
    default_codecs,
)

__all__ = [
    "pack",
    "unpack",
    "frame_for_stream",
    "HEADER_SEPARATOR",
    "MAX_PAYLOAD",
    "Codec",
    "CodecRegistry",
    "BytesCodec",
    "IntCodec",
    "MsgpackCodec",
    "NdarrayCodec",
    "ChannelBindings",
    "default_codecs",
]
