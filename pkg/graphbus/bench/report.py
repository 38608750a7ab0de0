"""
Report emitters: CSV, human-readable table, gnuplot data.
"""

from __future__ import annotations
import io
import logging
from dataclasses import asdict, fields
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd

from graphbus.bench.stats import BenchResult, SizeRecord
from graphbus.utils.sizes import format_size

logger = logging.getLogger("graphbus.bench.report")

COLUMNS = [f.name for f in fields(SizeRecord)]


class ReportFormat(str, Enum):
    CSV = "csv"
    TABLE = "table"
    PLOT_DATA = "plot-data"


def to_frame(result: BenchResult) -> pd.DataFrame:
    rows = [asdict(r) for r in result.records]
    return pd.DataFrame(rows, columns=COLUMNS)


def render_csv(result: BenchResult) -> str:
    return to_frame(result).to_csv(index=False, lineterminator="\n")


def render_table(result: BenchResult) -> str:
    lines = [f"{result.kind} benchmark | mode={result.mode} | latency: {result.convention}"]
    if not result.records:
        lines.append("(no results)")
        return "\n".join(lines) + "\n"
    df = to_frame(result)
    df.insert(2, "size", df["size_bytes"].map(format_size))
    lines.append(df.drop(columns=["size_bytes"]).to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    return "\n".join(lines) + "\n"


def render_plot_data(result: BenchResult) -> str:
    """Whitespace-separated series, one gnuplot index block per mode."""
    out = io.StringIO()
    out.write(f"# {result.kind} benchmark, latency convention: {result.convention}\n")
    out.write("# " + " ".join(COLUMNS[1:]) + "\n")
    df = to_frame(result)
    for i, (mode, group) in enumerate(df.groupby("mode", sort=False)):
        if i:
            out.write("\n\n")
        out.write(f"# mode {mode}\n")
        for row in group.itertuples(index=False):
            out.write(f"{row.size_bytes} {row.n} {row.mean_us!r} {row.median_us!r} {row.p99_us!r} {row.throughput_mbps!r}\n")
    return out.getvalue()


_PLOT_SUFFIXES = (".dat", ".txt")


def format_for_path(path: Optional[Path]) -> ReportFormat:
    """Format implied by an output path: table on stdout, plot-data for .dat/.txt, csv otherwise."""
    if path is None:
        return ReportFormat.TABLE
    if Path(path).suffix.lower() in _PLOT_SUFFIXES:
        return ReportFormat.PLOT_DATA
    return ReportFormat.CSV


def emit_report(
    result: BenchResult,
    fmt: Union[ReportFormat, str] = ReportFormat.CSV,
    out: Optional[Path] = None,
) -> str:
    """Render result; write it to `out` if given. Returns the rendered text."""
    fmt = ReportFormat(fmt)
    if fmt is ReportFormat.CSV:
        text = render_csv(result)
    elif fmt is ReportFormat.TABLE:
        text = render_table(result)
    else:
        text = render_plot_data(result)
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        logger.info("Wrote %s report (%d rows) to %s", fmt.value, len(result.records), out)
    return text


def read_report_csv(path: Union[Path, str, io.StringIO]) -> List[SizeRecord]:
    """Parse a CSV written by emit_report back into records."""
    df = pd.read_csv(path, dtype={"mode": str}, float_precision="round_trip")
    missing = [c for c in COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"report is missing columns {missing}")
    return [
        SizeRecord(
            mode=str(row["mode"]),
            size_bytes=int(row["size_bytes"]),
            n=int(row["n"]),
            mean_us=float(row["mean_us"]),
            median_us=float(row["median_us"]),
            p99_us=float(row["p99_us"]),
            throughput_mbps=float(row["throughput_mbps"]),
        )
        for _, row in df.iterrows()
    ]
