"""
Parameter server: YAML-backed key/value store with runtime get/set.

Nested maps are flattened to dotted paths ("a: {b: 3}" -> "a.b"). No stored key is a
prefix path of another, so get("a") can rebuild the {"b": 3} subtree.
Readers take a snapshot reference (never block); writers serialize on a lock and swap
in a fresh dict.
"""

from __future__ import annotations
import copy
import logging
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Union

import yaml

from graphbus.core.config import load_yaml, parse_yaml
from graphbus.core.errors import ConfigParseError, InvalidParam, ParamNotFound, TypeMismatch

logger = logging.getLogger("graphbus.params")

Value = Union[bool, int, float, str, list, dict]

_INT64_MIN = -(2 ** 63)
_INT64_MAX = 2 ** 63 - 1
_MISSING = object()


def _check_key(key: Any) -> str:
    if not isinstance(key, str) or not key:
        raise InvalidParam(f"Parameter key must be a non-empty string, got {key!r}")
    if any(not part or part != part.strip() for part in key.split(".")):
        raise InvalidParam(f"Malformed dotted key {key!r}")
    return key


def _check_value(value: Any, key: str) -> None:
    if isinstance(value, bool) or isinstance(value, float) or isinstance(value, str):
        return
    if isinstance(value, int):
        if not _INT64_MIN <= value <= _INT64_MAX:
            raise InvalidParam(f"{key}: integer {value} does not fit in 64 bits")
        return
    if isinstance(value, list):
        for item in value:
            _check_value(item, key)
        return
    if isinstance(value, dict):
        for k, v in value.items():
            if not isinstance(k, str):
                raise InvalidParam(f"{key}: map keys must be strings, got {k!r}")
            _check_value(v, key)
        return
    raise InvalidParam(f"{key}: unsupported value type {type(value).__name__}")


def _insert(entries: Dict[str, Value], key: str, value: Value) -> bool:
    """Store value at key, replacing any overlapping subtree or ancestor leaf. Returns True if something was overwritten."""
    overwritten = False
    prefix = key + "."
    for existing in [k for k in entries if k == key or k.startswith(prefix)]:
        del entries[existing]
        overwritten = True
    parts = key.split(".")
    for i in range(1, len(parts)):
        ancestor = ".".join(parts[:i])
        if ancestor in entries:
            del entries[ancestor]
            overwritten = True
    if isinstance(value, dict) and value:
        for sub_key, sub_value in value.items():
            _insert(entries, f"{key}.{_check_key(sub_key)}", sub_value)
    else:
        entries[key] = value
    return overwritten


def _flatten(data: Mapping[str, Any], source: str) -> Dict[str, Value]:
    entries: Dict[str, Value] = {}

    def walk(mapping: Mapping[Any, Any], prefix: str) -> None:
        for raw_key, value in mapping.items():
            if not isinstance(raw_key, str):
                raise ConfigParseError("parameter keys must be strings", source, field=str(raw_key))
            key = f"{prefix}.{raw_key}" if prefix else raw_key
            try:
                _check_key(key)
            except InvalidParam as e:
                raise ConfigParseError(str(e), source, field=key) from e
            if isinstance(value, dict) and value:
                walk(value, key)
                continue
            if value is None:
                logger.warning("%s: parameter %s is null, skipped", source, key)
                continue
            try:
                _check_value(value, key)
            except InvalidParam as e:
                raise ConfigParseError(str(e), source, field=key) from e
            if _insert(entries, key, value):
                logger.warning("%s: parameter %s overrides an earlier definition", source, key)

    walk(data, "")
    return entries


class ParameterStore:
    """Per-process parameter server."""

    def __init__(self, data: Optional[Mapping[str, Any]] = None, source: str = "<params>"):
        self._entries: Dict[str, Value] = _flatten(data, source) if data else {}
        self._generation = 0
        self._write_lock = threading.Lock()
        self.source = source

    @property
    def generation(self) -> int:
        return self._generation

    def __contains__(self, key: str) -> bool:
        return self._lookup(key, self._entries) is not _MISSING

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._entries))

    def keys(self) -> List[str]:
        return sorted(self._entries)

    @staticmethod
    def _lookup(key: str, entries: Dict[str, Value]) -> Any:
        if key in entries:
            return copy.deepcopy(entries[key])
        prefix = key + "."
        subtree = {k[len(prefix):]: v for k, v in entries.items() if k.startswith(prefix)}
        if not subtree:
            return _MISSING
        return _nest(subtree)

    def get(self, key: str) -> Value:
        """Value at a dotted key (leaf or rebuilt subtree). Raises ParamNotFound."""
        value = self._lookup(key, self._entries)
        if value is _MISSING:
            raise ParamNotFound(key)
        return value

    def get_or(self, key: str, default: Any = None) -> Any:
        value = self._lookup(key, self._entries)
        return default if value is _MISSING else value

    def _typed(self, key: str, kinds: tuple, label: str, default: Any) -> Any:
        value = self._lookup(key, self._entries)
        if value is _MISSING:
            if default is not _MISSING:
                return default
            raise ParamNotFound(key)
        if label in ("int", "float") and isinstance(value, bool):
            raise TypeMismatch(f"{key}: expected {label}, found bool")
        if not isinstance(value, kinds):
            raise TypeMismatch(f"{key}: expected {label}, found {type(value).__name__}")
        return value

    def get_bool(self, key: str, default: Any = _MISSING) -> bool:
        return self._typed(key, (bool,), "bool", default)

    def get_int(self, key: str, default: Any = _MISSING) -> int:
        return self._typed(key, (int,), "int", default)

    def get_float(self, key: str, default: Any = _MISSING) -> float:
        return self._typed(key, (float,), "float", default)

    def get_str(self, key: str, default: Any = _MISSING) -> str:
        return self._typed(key, (str,), "str", default)

    def get_list(self, key: str, default: Any = _MISSING) -> list:
        return self._typed(key, (list,), "list", default)

    def get_map(self, key: str, default: Any = _MISSING) -> dict:
        return self._typed(key, (dict,), "map", default)

    def set(self, key: str, value: Value) -> None:
        """Set key to value; visible to every later get. Bumps generation."""
        _check_key(key)
        _check_value(value, key)
        value = copy.deepcopy(value)
        with self._write_lock:
            entries = dict(self._entries)
            _insert(entries, key, value)
            self._entries = entries
            self._generation += 1
        logger.debug("Parameter %s set (generation %d)", key, self._generation)

    def apply_overrides(self, overrides: Iterable[str]) -> None:
        """Apply "key=value" strings; value is parsed as a YAML scalar/flow value."""
        for item in overrides:
            key, sep, raw = item.partition("=")
            key = key.strip()
            if not sep or not key:
                raise InvalidParam(f"Override must look like key=value, got {item!r}")
            try:
                value = parse_yaml(raw, f"--param {key}")
            except ConfigParseError as e:
                raise InvalidParam(str(e)) from e
            if value is None:
                raise InvalidParam(f"Override {key} has no value")
            self.set(key, value)

    def to_dict(self) -> Dict[str, Any]:
        return _nest(copy.deepcopy(self._entries))

    def save(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=True, allow_unicode=True)


def _nest(flat: Mapping[str, Any]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key in sorted(flat):
        node = out
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = flat[key]
    return out


def load_params(path: Path) -> ParameterStore:
    """Load a params YAML file. Empty file -> empty store."""
    data = load_yaml(path)
    if data is None:
        return ParameterStore(source=str(path))
    if not isinstance(data, dict):
        raise ConfigParseError("top level must be a mapping", str(path))
    store = ParameterStore(data, source=str(path))
    logger.info("Loaded %d parameters from %s", len(store), path)
    return store
