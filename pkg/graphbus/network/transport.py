"""
Socket plumbing: listeners/connections for tcp:// and ipc:// endpoints and
length-prefixed frame I/O over the resulting byte streams.
"""

from __future__ import annotations
import errno
import logging
import os
import socket
from typing import Optional

from graphbus.core.errors import BindFailure
from graphbus.messaging.wire import MAX_FRAME, STREAM_PREFIX, frame_for_stream
from graphbus.network.config import Endpoint

logger = logging.getLogger("graphbus.network.transport")


class StreamCorrupted(ConnectionError):
    """Outer frame_length is impossible; the stream cannot be resynchronized."""


def _family(endpoint: Endpoint) -> int:
    return socket.AF_UNIX if endpoint.scheme == "ipc" else socket.AF_INET6 if ":" in endpoint.bind_host else socket.AF_INET


def _clear_stale_ipc(path: str) -> None:
    """Remove a leftover socket file nobody is listening on."""
    if not os.path.exists(path):
        return
    probe = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
    try:
        probe.connect(path)
    except OSError:
        logger.info("Removing stale ipc socket %s", path)
        os.unlink(path)
    finally:
        probe.close()


def listen(endpoint: Endpoint, backlog: int = 64) -> socket.socket:
    """Bind and listen. Raises BindFailure (e.g. address in use)."""
    sock = socket.socket(_family(endpoint), socket.SOCK_STREAM)
    try:
        if endpoint.scheme == "ipc":
            _clear_stale_ipc(endpoint.path)
            sock.bind(endpoint.path)
        else:
            sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            sock.bind((endpoint.bind_host, endpoint.port))
        sock.listen(backlog)
    except OSError as e:
        sock.close()
        reason = "address in use" if e.errno == errno.EADDRINUSE else str(e)
        raise BindFailure(e.errno, f"cannot bind {endpoint.uri}: {reason}") from e
    return sock


def bound_uri(sock: socket.socket, endpoint: Endpoint) -> str:
    """URI a peer on this host can connect to (resolves port 0 and wildcard host)."""
    if endpoint.scheme == "ipc":
        return endpoint.uri
    port = sock.getsockname()[1]
    host = "127.0.0.1" if endpoint.wildcard else endpoint.host
    return f"tcp://{host}:{port}"


def connect(endpoint: Endpoint, timeout: Optional[float] = None) -> socket.socket:
    """Open a stream to endpoint. Raises OSError if unreachable."""
    if endpoint.scheme == "ipc":
        sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        sock.settimeout(timeout)
        try:
            sock.connect(endpoint.path)
        except OSError:
            sock.close()
            raise
    else:
        sock = socket.create_connection((endpoint.connect_host, endpoint.port), timeout=timeout)
    sock.settimeout(None)
    tune(sock)
    return sock


def tune(sock: socket.socket) -> None:
    if sock.family in (socket.AF_INET, socket.AF_INET6):
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)


class FramedStream:
    """Sends and receives u32-LE length-prefixed frames on a connected socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    def send_frame(self, frame: bytes) -> int:
        """Write one frame; returns bytes put on the wire (prefix included)."""
        data = frame_for_stream(frame)
        self.sock.sendall(data)
        return len(data)

    def recv_frame(self) -> Optional[bytearray]:
        """Next frame, or None on clean EOF. Raises StreamCorrupted / OSError."""
        prefix = self._recv_exact(STREAM_PREFIX.size)
        if prefix is None:
            return None
        (length,) = STREAM_PREFIX.unpack(prefix)
        if length > MAX_FRAME:
            raise StreamCorrupted(f"frame_length {length} exceeds {MAX_FRAME}")
        body = self._recv_exact(length)
        if body is None:
            raise ConnectionError("peer closed mid-frame")
        return body

    def _recv_exact(self, length: int) -> Optional[bytearray]:
        buf = bytearray(length)
        view = memoryview(buf)
        got = 0
        while got < length:
            n = self.sock.recv_into(view[got:], length - got)
            if n == 0:
                if got == 0:
                    return None
                raise ConnectionError("peer closed mid-frame")
            got += n
        return buf

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()
