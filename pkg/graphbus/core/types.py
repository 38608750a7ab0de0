"""
Core data types: channels, envelopes, invoke modes, discard reasons.
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Any, Union

from graphbus.core.errors import ChannelTooLong, InvalidChannel

MAX_NAME_BYTES = 255


def validate_name(name: Any, kind: str = "channel") -> bytes:
    """
    Check the lexical rules shared by channel and frame names and return the UTF-8 encoding.
    Non-empty, at most 255 bytes, no whitespace, no NUL.
    """
    if not isinstance(name, str):
        raise InvalidChannel(f"{kind} name must be str, got {type(name).__name__}")
    if not name:
        raise InvalidChannel(f"{kind} name is empty")
    if "\x00" in name or any(ch.isspace() for ch in name):
        raise InvalidChannel(f"{kind} name {name!r} contains whitespace or NUL")
    try:
        encoded = name.encode("utf-8")
    except UnicodeEncodeError as e:
        raise InvalidChannel(f"{kind} name is not valid UTF-8: {e}") from e
    if len(encoded) > MAX_NAME_BYTES:
        raise ChannelTooLong(f"{kind} name is {len(encoded)} bytes (max {MAX_NAME_BYTES})")
    return encoded


@dataclass(frozen=True)
class ChannelId:
    """Named topic. Equality is equality of the name (hence of its UTF-8 bytes)."""
    name: str

    def __post_init__(self) -> None:
        validate_name(self.name)

    @property
    def encoded(self) -> bytes:
        return self.name.encode("utf-8")

    def __str__(self) -> str:
        return self.name


ChannelLike = Union[str, ChannelId]


def as_channel(channel: ChannelLike) -> ChannelId:
    """Accept either a ChannelId or a plain name."""
    if isinstance(channel, ChannelId):
        return channel
    return ChannelId(channel)


class InvokeType(str, Enum):
    SERIAL = "serial"
    CONCURRENT = "concurrent"


@dataclass(frozen=True)
class Envelope:
    """Published value plus routing metadata. payload is shared, never copied."""
    channel: ChannelId
    payload: Any
    sequence: int


class DiscardReason(str, Enum):
    """Why an inbound frame was dropped."""
    TRUNCATED_HEADER = "truncated_header"
    BAD_SEPARATOR = "bad_separator"
    BAD_UTF8 = "bad_utf8"
    INVALID_CHANNEL = "invalid_channel"
    OVERSIZED = "oversized"
    DESERIALIZE_FAILED = "deserialize_failed"
