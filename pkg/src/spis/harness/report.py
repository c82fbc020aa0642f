"""CSV and JSON output for result rows."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .runner import COLUMNS, ResultRow

__all__ = ["emit_report", "format_float", "read_json_rows", "rows_to_csv", "rows_to_json"]


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def _cell(value) -> str:
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_cell(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: Sequence[ResultRow]) -> str:
    """JSON list mirroring the CSV columns; failing cells add an ``error`` field.

    Floats are written with full precision (NaN as the JSON extension token),
    so parsing the text reproduces the rows exactly.
    """
    out = []
    for row in rows:
        rec = {c: getattr(row, c) for c in COLUMNS}
        if row.error is not None:
            rec["error"] = row.error
        out.append(rec)
    return json.dumps(out, indent=2) + "\n"


def read_json_rows(text: str) -> list[ResultRow]:
    return [ResultRow(**rec) for rec in json.loads(text)]


def emit_report(rows: Iterable[ResultRow], path: str | Path, fmt: str = "csv") -> Path:
    """Write rows as ``csv`` or ``json``; raises OSError if the path is unwritable."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    path.write_text(text)
    return path
