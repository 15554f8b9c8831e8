"""CSV input and output.

Input prices are two-column ``label,price`` files; a non-numeric first row is
taken as a header. Labels are opaque strings and row order is preserved.
Outputs are written with a header row and floats in shortest round-trip form.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

from ._errors import CsvFormatError, DomainError
from .series import PriceSeries, _Series

__all__ = [
    "Table",
    "read_price_csv",
    "tail",
    "write_csv",
    "read_table",
    "series_table",
    "vega_table",
    "convergence_table",
]


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _open_text(source):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8")
    return source


def _parse_price(text, row):
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(f"unparseable price {text!r}", row) from None
    if not (math.isfinite(value) and value > 0):
        raise CsvFormatError(f"price must be positive, got {text!r}", row)
    return value


def read_price_csv(source) -> PriceSeries:
    """Read a ``label,price`` CSV (path or text stream) into a :class:`PriceSeries`."""
    handle = _open_text(source)
    try:
        rows = list(csv.reader(handle))
    finally:
        if handle is not source:
            handle.close()
    numbered = [(i, r) for i, r in enumerate(rows, start=1) if any(cell.strip() for cell in r)]
    if not numbered:
        raise CsvFormatError("empty file")
    _, first = numbered[0]
    if len(first) >= 2:
        try:
            float(first[1])
        except ValueError:
            numbered = numbered[1:]
    labels, prices = [], []
    for row_no, row in numbered:
        if len(row) != 2:
            raise CsvFormatError(f"expected 2 fields, got {len(row)}", row_no)
        labels.append(row[0].strip())
        prices.append(_parse_price(row[1].strip(), row_no))
    if len(prices) < 2:
        raise CsvFormatError("need at least two price rows")
    return PriceSeries(prices, labels=labels)


def tail(series, S: int):
    """The last ``S`` records of a series."""
    n = len(series)
    if S < 1 or S > n:
        raise DomainError(f"window {S} outside 1..{n}")
    values = series.values[n - S :]
    labels = None if series.labels is None else series.labels[n - S :]
    return type(series)(values, labels=labels)


def write_csv(table: Table, sink=None) -> str:
    """Write ``table`` to ``sink`` (path or text stream); returns the CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_format(v) for v in row])
    text = buf.getvalue()
    if sink is not None:
        if isinstance(sink, (str, Path)):
            Path(sink).write_text(text, encoding="utf-8")
        else:
            sink.write(text)
    return text


def _parse_cell(text):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(source) -> Table:
    """Read back any CSV produced by :func:`write_csv`."""
    handle = _open_text(source)
    try:
        rows = list(csv.reader(handle))
    finally:
        if handle is not source:
            handle.close()
    if not rows:
        raise CsvFormatError("empty file")
    return Table(tuple(rows[0]), [tuple(_parse_cell(c) for c in r) for r in rows[1:]])


def series_table(series: _Series) -> Table:
    """``index,value`` table for a price or yield series."""
    return Table(("index", "value"), [(i, float(v)) for i, v in enumerate(series.values)])


def vega_table(strikes, months, vegas) -> Table:
    """``K,T_months,vega`` rows from a maturity x strike Vega grid."""
    rows = []
    for i, t in enumerate(months):
        for j, k in enumerate(strikes):
            rows.append((float(k), float(t), float(vegas[i][j])))
    return Table(("K", "T_months", "vega"), rows)


def convergence_table(study) -> Table:
    return Table(("paths", "std_dev"), [(int(n), float(s)) for n, s in study])
