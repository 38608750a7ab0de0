"""
Wire framing. Layout (little-endian):

    [header_length: u32][header_separator: u16 = 0x4852][head_str][data_string]

head_str is the UTF-8 channel name and header_length is its byte length.
Byte streams carry an extra outer u32 frame_length before every frame.
"""

from __future__ import annotations
import struct
from typing import Tuple, Union

from graphbus.core.errors import InvalidChannel, PayloadTooLarge
from graphbus.core.types import ChannelId, ChannelLike, DiscardReason, MAX_NAME_BYTES, as_channel

HEADER_SEPARATOR = 0x4852
MAX_PAYLOAD = 64 * 1024 * 1024

_HEAD = struct.Struct("<IH")
HEAD_SIZE = _HEAD.size
STREAM_PREFIX = struct.Struct("<I")
# largest frame_length a stream reader accepts
MAX_FRAME = HEAD_SIZE + MAX_NAME_BYTES + MAX_PAYLOAD

Unpacked = Tuple[ChannelId, bytes]


def pack(channel: ChannelLike, data_string: bytes) -> bytes:
    """Build a frame. Raises InvalidChannel/ChannelTooLong/PayloadTooLarge."""
    head_str = as_channel(channel).encoded
    if len(data_string) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload is {len(data_string)} bytes (max {MAX_PAYLOAD})")
    return b"".join((_HEAD.pack(len(head_str), HEADER_SEPARATOR), head_str, data_string))


def unpack(frame: Union[bytes, bytearray, memoryview]) -> Union[Unpacked, DiscardReason]:
    """
    Split a frame into (channel, data_string). Never raises: structural
    violations come back as a DiscardReason and the caller drops the frame.
    """
    if len(frame) < HEAD_SIZE:
        return DiscardReason.TRUNCATED_HEADER
    header_length, separator = _HEAD.unpack_from(frame, 0)
    if separator != HEADER_SEPARATOR:
        return DiscardReason.BAD_SEPARATOR
    end = HEAD_SIZE + header_length
    if end > len(frame):
        return DiscardReason.TRUNCATED_HEADER
    try:
        name = bytes(frame[HEAD_SIZE:end]).decode("utf-8")
    except UnicodeDecodeError:
        return DiscardReason.BAD_UTF8
    try:
        channel = ChannelId(name)
    except InvalidChannel:
        return DiscardReason.INVALID_CHANNEL
    return channel, bytes(frame[end:])


def frame_for_stream(frame: bytes) -> bytes:
    """Prefix a frame with its u32 LE length for byte-stream transports."""
    return STREAM_PREFIX.pack(len(frame)) + frame
