"""Utils: size parsing, locks."""

from graphbus.utils.sizes import parse_size, parse_sizes, format_size
from graphbus.utils.locks import ReadWriteLock

__all__ = ["parse_size", "parse_sizes", "format_size", "ReadWriteLock"]
