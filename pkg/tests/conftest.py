"""Shared fixtures: graph runtimes, free ports, config directories."""

from __future__ import annotations
import socket
from pathlib import Path
from typing import Iterator, List, Optional

import pytest
import yaml

from graphbus.graph.runtime import GraphRuntime


def free_port() -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def write_network(
    directory: Path,
    publish: Optional[str] = None,
    exports: List[str] = (),
    subscribe: Optional[str] = None,
    imports: List[str] = (),
) -> Path:
    network = {}
    if publish:
        network["publisher"] = {"ip": publish, "channels": list(exports)}
    if subscribe:
        network["subscribers"] = [{"ip": subscribe, "channels": list(imports)}]
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "network_setting.yaml"
    path.write_text(yaml.safe_dump({"network": network}), encoding="utf-8")
    return path


@pytest.fixture
def graph() -> Iterator[GraphRuntime]:
    g = GraphRuntime(workers=4)
    yield g
    g.shutdown(timeout=5.0)


@pytest.fixture
def port() -> int:
    return free_port()
