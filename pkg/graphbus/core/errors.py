"""
Exception hierarchy. Every error raised by graphbus derives from GraphBusError.
Value-shaped errors also subclass ValueError, lookups subclass KeyError.
"""

from __future__ import annotations
from typing import Optional


class GraphBusError(Exception):
    """Base class for all graphbus errors."""


# Channels, wire, codecs

class InvalidChannel(GraphBusError, ValueError):
    """Channel name is empty, contains whitespace/NUL, or is not encodable."""


class ChannelTooLong(InvalidChannel):
    """Channel name exceeds 255 bytes in UTF-8."""


class PayloadTooLarge(GraphBusError, ValueError):
    """data_string exceeds the maximum frame payload."""


class CodecError(GraphBusError, ValueError):
    """A codec could not serialize or deserialize a value."""


class DuplicateCodec(GraphBusError, ValueError):
    """A different codec is already registered for the type tag."""


class MissingCodec(GraphBusError, KeyError):
    """No codec registered for the type tag (or for the payload's type)."""


class ChannelCodecConflict(GraphBusError, ValueError):
    """The channel is already bound to a different type tag."""


# Graph

class GraphShutDown(GraphBusError, RuntimeError):
    """Operation attempted on a graph that has been shut down."""


class UnknownNode(GraphBusError, KeyError):
    """Node id was never registered or is already deregistered."""


# Configuration / network

class ConfigParseError(GraphBusError, ValueError):
    """Configuration file could not be parsed or failed validation."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        field: Optional[str] = None,
    ):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        prefix = (", ".join(where) + ": ") if where else ""
        super().__init__(prefix + message)


class InvalidUri(ConfigParseError):
    """Endpoint URI is not scheme://host:port (tcp) or ipc://path."""


class BindFailure(GraphBusError, OSError):
    """Publisher endpoint could not be bound (e.g. address in use)."""


# Transform tree

class InvalidTransform(GraphBusError, ValueError):
    """Matrix is not a proper rigid transform."""


class CycleError(GraphBusError, ValueError):
    """Edge would create a cycle in the frame tree."""


class ReparentError(GraphBusError, ValueError):
    """Child frame already has a different parent."""


class UnknownFrame(GraphBusError, KeyError):
    """Frame is not in the tree."""


class DisconnectedFrames(GraphBusError, ValueError):
    """Frames have no common ancestor."""


# Parameters

class ParamNotFound(GraphBusError, KeyError):
    """Parameter key not present."""


class TypeMismatch(GraphBusError, TypeError):
    """Typed accessor used on a value of another type."""


class InvalidParam(GraphBusError, ValueError):
    """Malformed key or unsupported value type."""


# Benchmarks

class BenchSpecError(GraphBusError, ValueError):
    """Benchmark parameters are invalid."""


class PeerUnreachable(GraphBusError):
    """Benchmark peer never answered the readiness probe."""


class BenchTimeout(GraphBusError, TimeoutError):
    """A benchmark packet was not received before its deadline."""
