"""Payload size strings ("4K", "10M") and size lists for benchmark CLIs."""

from __future__ import annotations
import re
from typing import List

_UNITS = {"": 1, "K": 1024, "M": 1024 ** 2, "G": 1024 ** 3}
_SIZE_RE = re.compile(r"^(\d+)\s*([KMG]?)(?:I?B)?$", re.IGNORECASE)


def parse_size(text: str) -> int:
    """'4K' -> 4096, '10M' -> 10485760, '512' -> 512. Units are binary."""
    m = _SIZE_RE.match(text.strip())
    if not m:
        raise ValueError(f"Unsupported size: {text!r}")
    return int(m.group(1)) * _UNITS[m.group(2).upper()]


def format_size(n: int) -> str:
    """Inverse of parse_size for exact multiples; plain bytes otherwise."""
    for suffix in ("G", "M", "K"):
        unit = _UNITS[suffix]
        if n >= unit and n % unit == 0:
            return f"{n // unit}{suffix}"
    return str(n)


def _doubling(lo: int, hi: int) -> List[int]:
    if lo <= 0 or hi < lo:
        raise ValueError(f"Bad size range {lo}..{hi}")
    out = []
    size = lo
    while size < hi:
        out.append(size)
        size *= 2
    out.append(hi)
    return out


def parse_sizes(text: str) -> List[int]:
    """
    Comma-separated sizes. "a..b" expands by doubling from a up to b (b included).
    A literal "..." item continues the geometric series of the two items before it
    up to the item after it: "1K,4K,...,4096K" -> 1K,4K,16K,64K,256K,1024K,4096K.
    """
    items = [t.strip() for t in text.split(",") if t.strip()]
    out: List[int] = []
    i = 0
    while i < len(items):
        item = items[i]
        if item == "...":
            if len(out) < 2 or i + 1 >= len(items):
                raise ValueError("'...' needs two sizes before it and one after it")
            ratio = out[-1] // out[-2] if out[-2] else 0
            end = parse_size(items[i + 1])
            if ratio < 2 or out[-1] * ratio > end or out[-1] % out[-2]:
                raise ValueError(f"Cannot continue series {out[-2]},{out[-1]} up to {end}")
            while out[-1] * ratio < end:
                out.append(out[-1] * ratio)
            out.append(end)
            i += 2
            continue
        if ".." in item:
            lo, _, hi = item.partition("..")
            out.extend(_doubling(parse_size(lo), parse_size(hi)))
        else:
            out.append(parse_size(item))
        i += 1
    if not out:
        raise ValueError("Empty size list")
    return out
