"""Unified API: to_any / from_any and runtime construction."""

from graphbus.api.context import RuntimeContext, init_runtime

__all__ = ["RuntimeContext", "init_runtime"]
