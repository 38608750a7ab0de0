"""
Echo peer for cross-boundary benchmarks: every packet on bench_data is re-published on bench_echo.
"""

from __future__ import annotations
import logging
import tempfile
import threading
from pathlib import Path
from typing import Any, Optional, Sequence

from graphbus.api.context import RuntimeContext, init_runtime
from graphbus.bench.packets import (
    DATA_CHANNEL,
    ECHO_CHANNEL,
    PACKET_TAG,
    bench_codecs,
    write_network_setting,
)
from graphbus.core.config import NETWORK_FILE
from graphbus.core.logger import setup_logging
from graphbus.core.types import InvokeType
from graphbus.network.bridge import PeerInfo

logger = logging.getLogger("graphbus.bench.receiver")


def start_receiver(
    listen: Optional[str] = None,
    peer: Optional[str] = None,
    config_dir: Optional[Path] = None,
    overrides: Sequence[str] = (),
) -> RuntimeContext:
    """
    Start an echo runtime exporting bench_echo and importing bench_data.

    With listen and peer, a network_setting.yaml is generated for both sides.
    With listen alone, the receiver only publishes and subscribes back to each
    sender that advertises its own publisher in the handshake. Otherwise
    config_dir must hold a network_setting.yaml.
    """
    if listen:
        with tempfile.TemporaryDirectory(prefix="graphbus-recv-") as tmp:
            write_network_setting(Path(tmp), listen, [ECHO_CHANNEL], peer, [DATA_CHANNEL])
            ctx = init_runtime(tmp, overrides=overrides, codecs=bench_codecs())
    elif config_dir is not None and (Path(config_dir) / NETWORK_FILE).exists():
        ctx = init_runtime(config_dir, overrides=overrides, codecs=bench_codecs())
    else:
        raise ValueError("receiver needs --listen (optionally --peer) or a --config-dir with network_setting.yaml")

    def echo(packet: Any) -> None:
        ctx.to_any(ECHO_CHANNEL, packet)

    def follow(info: PeerInfo) -> None:
        if ECHO_CHANNEL not in info.channels:
            return
        if info.publish_uri is None:
            logger.warning("Sender %s did not advertise a publisher; nothing to echo", info.name)
            return
        ctx.bridge.add_subscription(info.publish_uri, [DATA_CHANNEL])

    ctx.from_any(DATA_CHANNEL, InvokeType.SERIAL, PACKET_TAG, echo)
    if listen and not peer:
        ctx.bridge.on_peer(follow)
    logger.info("Echo receiver up on %s", ctx.bridge.publish_uri)
    return ctx


def serve(
    listen: Optional[str],
    peer: Optional[str],
    stop: Optional[Any] = None,
    config_dir: Optional[Path] = None,
    overrides: Sequence[str] = (),
    log_level: Optional[str] = None,
) -> None:
    """Run until `stop` (an Event) is set, or until interrupted when stop is None."""
    if log_level:
        setup_logging(log_level)
    ctx = start_receiver(listen, peer, config_dir, overrides)
    try:
        (stop or threading.Event()).wait()
    except KeyboardInterrupt:
        logger.info("Receiver interrupted")
    finally:
        ctx.shutdown()
