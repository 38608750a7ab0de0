"""
Serialization seam: Codec interface, registry, and reference codecs.
"""

from __future__ import annotations
import logging
import struct
import threading
from abc import ABC, abstractmethod
from typing import Any, Dict, Iterator, Optional, Tuple

import msgpack
import numpy as np

from graphbus.core.errors import ChannelCodecConflict, CodecError, DuplicateCodec, MissingCodec
from graphbus.core.types import ChannelId

logger = logging.getLogger("graphbus.codecs")

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


class Codec(ABC):
    """Turns values of one message type into bytes and back."""

    type_tag: str = ""
    python_types: Tuple[type, ...] = ()

    @abstractmethod
    def serialize(self, value: Any) -> bytes:
        pass

    @abstractmethod
    def deserialize(self, data: bytes) -> Any:
        """Raise CodecError on malformed input."""
        pass

    def accepts(self, value: Any) -> bool:
        """True if this codec is the natural one for value (used by tag_for)."""
        return bool(self.python_types) and isinstance(value, self.python_types)

    def __eq__(self, other: object) -> bool:
        return type(self) is type(other) and self.type_tag == getattr(other, "type_tag", None)

    def __hash__(self) -> int:
        return hash((type(self), self.type_tag))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.type_tag!r})"


class BytesCodec(Codec):
    """u32 LE length + raw bytes."""

    type_tag = "bytes"
    python_types = (bytes, bytearray, memoryview)

    def serialize(self, value: Any) -> bytes:
        if not isinstance(value, self.python_types):
            raise CodecError(f"bytes codec cannot encode {type(value).__name__}")
        raw = bytes(value)
        return _U32.pack(len(raw)) + raw

    def deserialize(self, data: bytes) -> bytes:
        if len(data) < _U32.size:
            raise CodecError("bytes payload shorter than its length prefix")
        (length,) = _U32.unpack_from(data, 0)
        if length != len(data) - _U32.size:
            raise CodecError(f"bytes length prefix {length} != body {len(data) - _U32.size}")
        return bytes(data[_U32.size:])


class IntCodec(Codec):
    """u64 LE."""

    type_tag = "int"
    python_types = (int,)

    def accepts(self, value: Any) -> bool:
        return isinstance(value, int) and not isinstance(value, bool)

    def serialize(self, value: Any) -> bytes:
        if not self.accepts(value):
            raise CodecError(f"int codec cannot encode {type(value).__name__}")
        if not 0 <= value < 2 ** 64:
            raise CodecError(f"int {value} outside u64 range")
        return _U64.pack(value)

    def deserialize(self, data: bytes) -> int:
        if len(data) != _U64.size:
            raise CodecError(f"int payload must be 8 bytes, got {len(data)}")
        return _U64.unpack(data)[0]


class MsgpackCodec(Codec):
    """Structured values (maps, lists, strings, floats) via msgpack."""

    type_tag = "msgpack"
    python_types = (dict, list, str, float)

    def serialize(self, value: Any) -> bytes:
        try:
            return msgpack.packb(value, use_bin_type=True)
        except (TypeError, ValueError, OverflowError) as e:
            raise CodecError(f"msgpack cannot encode value: {e}") from e

    def deserialize(self, data: bytes) -> Any:
        try:
            return msgpack.unpackb(data, raw=False, strict_map_key=False)
        except Exception as e:  # msgpack raises several unrelated types on bad input
            raise CodecError(f"msgpack decode failed: {e}") from e


class NdarrayCodec(Codec):
    """
    numpy arrays: [dtype_len: u8][dtype.str][ndim: u8][shape: ndim x u64][C-order buffer].
    Decoded arrays are read-only views over the received bytes.
    """

    type_tag = "ndarray"
    python_types = (np.ndarray,)

    def serialize(self, value: Any) -> bytes:
        if not isinstance(value, np.ndarray):
            raise CodecError(f"ndarray codec cannot encode {type(value).__name__}")
        if value.dtype.hasobject:
            raise CodecError("object arrays are not serializable")
        dtype = value.dtype.str.encode("ascii")
        header = bytes([len(dtype)]) + dtype + bytes([value.ndim])
        header += b"".join(_U64.pack(n) for n in value.shape)
        return header + np.ascontiguousarray(value).tobytes()

    def deserialize(self, data: bytes) -> np.ndarray:
        try:
            pos = 0
            dlen = data[pos]
            pos += 1
            dtype = np.dtype(bytes(data[pos:pos + dlen]).decode("ascii"))
            pos += dlen
            ndim = data[pos]
            pos += 1
            shape = tuple(_U64.unpack_from(data, pos + 8 * i)[0] for i in range(ndim))
            pos += 8 * ndim
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            if dtype.hasobject or len(data) - pos != count * dtype.itemsize:
                raise CodecError("ndarray body size does not match header")
            return np.frombuffer(data, dtype=dtype, count=count, offset=pos).reshape(shape)
        except CodecError:
            raise
        except (IndexError, struct.error, TypeError, ValueError, UnicodeDecodeError) as e:
            raise CodecError(f"ndarray decode failed: {e}") from e


class CodecRegistry:
    """
    type_tag -> codec. Registrations are expected before the graph starts;
    lookups read an immutable snapshot and take no lock.
    """

    def __init__(self) -> None:
        self._codecs: Dict[str, Any] = {}
        self._lock = threading.Lock()

    def register(self, type_tag: str, codec: Any) -> None:
        """Register codec for type_tag. Same codec again is a no-op; a different one raises DuplicateCodec."""
        if not isinstance(type_tag, str) or not type_tag:
            raise ValueError("type_tag must be a non-empty string")
        if not (callable(getattr(codec, "serialize", None)) and callable(getattr(codec, "deserialize", None))):
            raise TypeError(f"{codec!r} does not provide serialize/deserialize")
        with self._lock:
            existing = self._codecs.get(type_tag)
            if existing is not None:
                if existing is codec or existing == codec:
                    return
                raise DuplicateCodec(f"type tag {type_tag!r} already bound to {existing!r}")
            updated = dict(self._codecs)
            updated[type_tag] = codec
            self._codecs = updated
        logger.debug("Registered codec %r for %r", codec, type_tag)

    def get(self, type_tag: str) -> Any:
        try:
            return self._codecs[type_tag]
        except KeyError:
            raise MissingCodec(f"no codec registered for type tag {type_tag!r}") from None

    def __contains__(self, type_tag: object) -> bool:
        return type_tag in self._codecs

    def __iter__(self) -> Iterator[str]:
        return iter(list(self._codecs))

    def tag_for(self, value: Any) -> str:
        """First registered tag whose codec accepts value."""
        for tag, codec in self._codecs.items():
            accepts = getattr(codec, "accepts", None)
            if accepts is not None and accepts(value):
                return tag
        raise MissingCodec(f"no codec registered for payload type {type(value).__name__}")

    def serialize(self, type_tag: str, value: Any) -> bytes:
        return self.get(type_tag).serialize(value)

    def deserialize(self, type_tag: str, data: bytes) -> Any:
        return self.get(type_tag).deserialize(data)


class ChannelBindings:
    """channel -> type_tag. A channel carries exactly one payload type."""

    def __init__(self) -> None:
        self._tags: Dict[ChannelId, str] = {}
        self._lock = threading.Lock()

    def bind(self, channel: ChannelId, type_tag: str) -> None:
        """Raises ChannelCodecConflict if the channel is bound to another tag."""
        with self._lock:
            current = self._tags.get(channel)
            if current is not None and current != type_tag:
                raise ChannelCodecConflict(
                    f"channel {channel.name!r} already carries {current!r}, not {type_tag!r}"
                )
            if current is None:
                updated = dict(self._tags)
                updated[channel] = type_tag
                self._tags = updated

    def get(self, channel: ChannelId) -> Optional[str]:
        return self._tags.get(channel)

    def __contains__(self, channel: object) -> bool:
        return channel in self._tags


def default_codecs() -> CodecRegistry:
    """Registry pre-loaded with the reference codecs."""
    registry = CodecRegistry()
    for codec in (BytesCodec(), IntCodec(), MsgpackCodec(), NdarrayCodec()):
        registry.register(codec.type_tag, codec)
    return registry
