"""Compressed-size and timing measurements across serialization versions.

Rows mirror the two report shapes: article size plus translation time, and
emitted-module size plus checking time, each at version 5 and version 6.
Sizes are gzip-compressed byte counts reported in KB of 1000 bytes, rounded
half-up; times are medians over a configurable repetition count.
"""

from __future__ import annotations

import csv
import gzip
import io
import json
import platform
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .article import emit_article, read_article_text, replay
from .dedukti import emit_module, prelude_module, translate_package
from .lpcheck import typecheck


def gzip_bytes(text: str) -> bytes:
    # fixed mtime keeps the stream byte-identical across runs
    return gzip.compress(text.encode("utf-8"), compresslevel=9, mtime=0)


def kb(nbytes: int) -> int:
    """KB of 1000 bytes, rounded half-up."""
    return (nbytes + 500) // 1000


@dataclass
class BenchRow:
    package: str
    article_kb_v5: Optional[int] = None
    translate_s_v5: Optional[float] = None
    article_kb_v6: Optional[int] = None
    translate_s_v6: Optional[float] = None
    dk_kb_v5: Optional[int] = None
    check_s_v5: Optional[float] = None
    dk_kb_v6: Optional[int] = None
    check_s_v6: Optional[float] = None
    article_gz_bytes_v5: Optional[int] = None
    article_gz_bytes_v6: Optional[int] = None
    error: Optional[str] = None

    def to_json(self) -> dict:
        out = {"package": self.package}
        for key in ("article_kb_v5", "translate_s_v5", "article_kb_v6",
                    "translate_s_v6", "dk_kb_v5", "check_s_v5", "dk_kb_v6",
                    "check_s_v6", "article_gz_bytes_v5",
                    "article_gz_bytes_v6", "error"):
            value = getattr(self, key)
            if value is not None:
                out[key.replace("_", "-")] = value
        return out


def environment_record(repetitions: int) -> dict:
    cpu = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo", "r", encoding="utf-8") as fh:
            for line in fh:
                if line.lower().startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return {
        "os": platform.platform(),
        "cpu": cpu,
        "python": platform.python_version(),
        "repetitions": repetitions,
        "time-statistic": "median",
        "kb-definition": "1000 bytes, rounded half-up",
    }


def _median_seconds(fn, repetitions: int) -> float:
    times = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def measure(paths: Sequence[Union[str, Path]],
            repetitions: int = 3) -> tuple:
    """Benchmark every article; failures land in the row, the run goes on."""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    prelude = prelude_module()
    rows = []
    for raw in paths:
        path = Path(raw)
        row = BenchRow(package=path.stem)
        rows.append(row)
        try:
            base = replay(read_article_text(path))
            for version in (5, 6):
                text = emit_article(base, version)
                gz = gzip_bytes(text)
                setattr(row, f"article_gz_bytes_v{version}", len(gz))
                setattr(row, f"article_kb_v{version}", kb(len(gz)))
                result = replay(text)
                name = path.stem
                setattr(row, f"translate_s_v{version}", _median_seconds(
                    lambda: translate_package(result, name), repetitions))
                module = translate_package(result, name)
                dk_gz = gzip_bytes(emit_module(module))
                setattr(row, f"dk_kb_v{version}", kb(len(dk_gz)))
                setattr(row, f"check_s_v{version}", _median_seconds(
                    lambda: typecheck(module, deps=[prelude]), repetitions))
                report = typecheck(module, deps=[prelude])
                if not report.ok:
                    row.error = f"v{version} module failed checking"
        except Exception as e:  # noqa: BLE001 - per-row fault isolation
            row.error = f"{type(e).__name__}: {e}"
    return rows, environment_record(repetitions)


# ---------------------------------------------------------------------------
# Report emission

_TABLES = {
    "articles": ("article_kb_v5", "translate_s_v5",
                 "article_kb_v6", "translate_s_v6"),
    "dedukti": ("dk_kb_v5", "check_s_v5", "dk_kb_v6", "check_s_v6"),
}

_HEADERS = ("Package", "v5 Size (KB)", "v5 Time (s)",
            "v6 Size (KB)", "v6 Time (s)")


def _totals(rows: Sequence[BenchRow], fields: Sequence[str]) -> list:
    out = []
    for name in fields:
        values = [getattr(r, name) or 0 for r in rows]
        total = sum(values)
        out.append(round(total, 2) if name.endswith("_s_v5")
                   or name.endswith("_s_v6") else total)
    return out


def _cells(row: BenchRow, fields: Sequence[str]) -> list:
    cells = []
    for name in fields:
        value = getattr(row, name)
        if value is None:
            cells.append("-")
        elif isinstance(value, float):
            cells.append("%.2f" % value)
        else:
            cells.append(str(value))
    return cells


def emit_table(rows: Sequence[BenchRow], fmt: str = "text",
               table: str = "articles") -> str:
    """Render a report; the Total line is always recomputed from the rows."""
    if table not in _TABLES:
        raise ValueError(f"unknown table {table!r}")
    fields = _TABLES[table]
    totals = _totals(rows, fields)
    if fmt == "json":
        doc = {
            "table": table,
            "rows": [r.to_json() for r in rows],
            "total": dict(zip(("size-kb-v5", "time-s-v5",
                               "size-kb-v6", "time-s-v6"), totals)),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    body = [[r.package] + _cells(r, fields) for r in rows]
    total_line = ["Total"] + ["%.2f" % t if isinstance(t, float) else str(t)
                              for t in totals]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(_HEADERS)
        writer.writerows(body)
        writer.writerow(total_line)
        return buf.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    table_rows = [list(_HEADERS)] + body + [total_line]
    widths = [max(len(line[i]) for line in table_rows)
              for i in range(len(_HEADERS))]
    lines = []
    for i, line in enumerate(table_rows):
        cells = [line[0].ljust(widths[0])]
        cells += [c.rjust(widths[j + 1]) for j, c in enumerate(line[1:])]
        lines.append(" | ".join(cells).rstrip())
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def reduction_summary(rows: Sequence[BenchRow]) -> str:
    """Corpus-level size change between the two serializations."""
    v5 = sum(r.article_gz_bytes_v5 or 0 for r in rows)
    v6 = sum(r.article_gz_bytes_v6 or 0 for r in rows)
    if v5 == 0:
        return "article size unchanged (empty corpus)"
    pct = 100.0 * (v5 - v6) / v5
    return "article size reduced by around %d%%" % round(pct)
