"""Core: config, types, errors, logging."""

from graphbus.core.config import load_settings, load_yaml, Settings
from graphbus.core.types import ChannelId, Envelope, InvokeType, DiscardReason, as_channel
from graphbus.core.logger import setup_logging

__all__ = [
    "load_settings",
    "load_yaml",
    "Settings",
    "ChannelId",
    "Envelope",
    "InvokeType",
    "DiscardReason",
    "as_channel",
    "setup_logging",
]
