"""
YAML loading (duplicate-key aware) and runtime settings from params + .env.
"""

from __future__ import annotations
import logging
import os
from pathlib import Path
from typing import Any, Optional, TYPE_CHECKING

import yaml
from dotenv import load_dotenv

from graphbus.core.errors import ConfigParseError, TypeMismatch

if TYPE_CHECKING:
    from graphbus.support.params import ParameterStore

logger = logging.getLogger("graphbus.config")

NETWORK_FILE = "network_setting.yaml"
PARAMS_FILE = "params.yaml"
DEFAULT_HIGH_WATERMARK = 100_000


class _DuplicateKeyLoader(yaml.SafeLoader):
    """SafeLoader that warns on duplicate mapping keys (last wins)."""
    source_path: str = "<yaml>"


def _construct_mapping(loader: _DuplicateKeyLoader, node: yaml.MappingNode, deep: bool = False) -> dict:
    loader.flatten_mapping(node)
    mapping: dict[Any, Any] = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        try:
            hash(key)
        except TypeError as e:
            raise ConfigParseError(
                "unhashable mapping key", loader.source_path, key_node.start_mark.line + 1
            ) from e
        if key in mapping:
            logger.warning(
                "%s line %d: duplicate key %r, last value wins",
                loader.source_path, key_node.start_mark.line + 1, key,
            )
        mapping[key] = loader.construct_object(value_node, deep=deep)
    return mapping


_DuplicateKeyLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def parse_yaml(text: str, source: str = "<yaml>") -> Any:
    """Parse YAML text. Raises ConfigParseError with the offending line."""
    loader = _DuplicateKeyLoader(text)
    loader.source_path = source
    try:
        return loader.get_single_data()
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigParseError(str(problem), source, line) from e
    finally:
        loader.dispose()


def load_yaml(path: Path) -> Any:
    """Load a YAML file. Empty files yield None."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigParseError(f"cannot read file: {e}", str(path)) from e
    except UnicodeDecodeError as e:
        raise ConfigParseError(f"file is not UTF-8: {e}", str(path)) from e
    return parse_yaml(text, str(path))


def _env_path(project_root: Optional[Path] = None) -> Path:
    root = project_root or Path(__file__).resolve().parents[2]
    return root / ".env"


def load_dotenv_if_exists(project_root: Optional[Path] = None) -> None:
    """Load .env from project root if present."""
    path = _env_path(project_root)
    if path.exists():
        load_dotenv(path)


def load_settings(
    params: Optional["ParameterStore"] = None,
    project_root: Optional[Path] = None,
) -> "Settings":
    """Build Settings from the parameter store, overlaid with env (GRAPHBUS_*)."""
    load_dotenv_if_exists(project_root)

    def param(key: str, default: Any) -> Any:
        if params is None:
            return default
        return params.get_or(key, default)

    def param_int(key: str, default: int) -> int:
        if params is None:
            return default
        try:
            return params.get_int(key, default)
        except TypeMismatch as e:
            raise ConfigParseError(str(e), str(params.source), field=key) from e

    def env_int(key: str, default: int) -> int:
        try:
            return int(os.getenv(key, str(default)))
        except ValueError:
            logger.warning("Ignoring non-integer %s", key)
            return default

    workers = env_int("GRAPHBUS_WORKERS", param_int("data_graph.workers", os.cpu_count() or 4))
    return Settings(
        workers=max(1, workers),
        high_watermark=param_int("data_graph.high_watermark", DEFAULT_HIGH_WATERMARK),
        log_level=os.getenv("GRAPHBUS_LOG_LEVEL", str(param("logging.level", "INFO"))).strip(),
        log_dir=os.getenv("GRAPHBUS_LOG_DIR", param("logging.log_dir", None)),
        log_file=str(param("logging.log_file", "graphbus.log")),
    )


class Settings:
    """Process-level settings. Immutable after load."""

    __slots__ = ("workers", "high_watermark", "log_level", "log_dir", "log_file")

    def __init__(
        self,
        workers: int = 4,
        high_watermark: int = DEFAULT_HIGH_WATERMARK,
        log_level: str = "INFO",
        log_dir: Optional[Path] = None,
        log_file: str = "graphbus.log",
    ):
        self.workers = workers
        self.high_watermark = high_watermark
        self.log_level = log_level
        self.log_dir = Path(log_dir) if log_dir else None
        self.log_file = log_file
