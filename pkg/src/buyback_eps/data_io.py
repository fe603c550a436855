"""Ingestion, validation and quarterly alignment of financial time series.

One flat CSV schema carries everything the analysis pipelines need. Rows
that cannot be parsed are collected into an error report with their line
numbers while the rest of the file still loads; alignment onto the
quarterly grid never fabricates values, it only flags gaps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from datetime import date
from importlib import resources
from pathlib import Path

from .errors import DataError

CSV_COLUMNS = (
    "period_end",
    "eps",
    "buyback_value",
    "market_cap",
    "pe",
    "interest_rate",
    "pretax_profit",
    "posttax_profit",
)

_NON_NEGATIVE_COLUMNS = ("buyback_value", "market_cap")


@dataclass
class QuarterRecord:
    """One quarter of ingested data; absent cells are None.

    ``source_line`` is the 1-based line number in the file of origin, kept
    so validation errors can point back at the input.
    """

    period_end: date
    eps: float | None = None
    buyback_value: float | None = None
    market_cap: float | None = None
    pe: float | None = None
    interest_rate: float | None = None
    pretax_profit: float | None = None
    posttax_profit: float | None = None
    source_line: int | None = None

    def data_fields(self) -> dict[str, float | None]:
        """Value columns only, in schema order."""
        return {name: getattr(self, name) for name in CSV_COLUMNS[1:]}


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass
class LoadResult:
    """Parsed records plus the row-level error report."""

    records: list[QuarterRecord]
    errors: list[RowError]


@dataclass
class AlignedDataset:
    """Quarterly grid spanning the input records.

    ``periods`` are labels like ``2012Q1``; ``period_ends`` the actual
    record dates (None for gaps); ``columns`` one aligned list per value
    column where None marks an absent cell; ``missing`` the labels of
    quarters with no record at all.
    """

    periods: list[str]
    period_ends: list[date | None]
    columns: dict[str, list[float | None]]
    missing: list[str]


def load_csv(path: str | Path) -> LoadResult:
    """Parse a CSV file against the flat quarterly schema.

    The header must match the schema exactly; a malformed data row becomes
    a :class:`RowError` (with its line number) and loading continues.
    Parsing is locale-independent: ISO-8601 dates, decimal points, UTF-8,
    LF or CRLF.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open("r", encoding="utf-8", newline="") as handle:
        return _parse(csv.reader(handle))


def loads_csv(text: str) -> LoadResult:
    """Like :func:`load_csv` but for CSV content already in memory."""
    return _parse(csv.reader(text.splitlines()))


def _parse(reader) -> LoadResult:
    rows = list(reader)
    if not rows or tuple(cell.strip() for cell in rows[0]) != CSV_COLUMNS:
        raise DataError(
            "missing or invalid header: expected exactly " + ",".join(CSV_COLUMNS)
        )
    records: list[QuarterRecord] = []
    errors: list[RowError] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(cell.strip() == "" for cell in row):
            continue
        try:
            records.append(_parse_row(row, line_no))
        except DataError as exc:
            errors.append(RowError(line=line_no, message=str(exc)))
    return LoadResult(records=records, errors=errors)


def _parse_row(row: list[str], line_no: int) -> QuarterRecord:
    if len(row) != len(CSV_COLUMNS):
        raise DataError(f"expected {len(CSV_COLUMNS)} cells, got {len(row)}")
    cells = [cell.strip() for cell in row]
    period_end = _parse_date(cells[0])
    values: dict[str, float | None] = {}
    for name, cell in zip(CSV_COLUMNS[1:], cells[1:]):
        if cell == "":
            values[name] = None
            continue
        try:
            parsed = float(cell)
        except ValueError:
            raise DataError(f"column {name}: not a number: {cell!r}") from None
        if name in _NON_NEGATIVE_COLUMNS and parsed < 0.0:
            raise DataError(f"column {name}: must be non-negative, got {cell}")
        values[name] = parsed
    if all(v is None for v in values.values()):
        raise DataError("no data fields present besides period_end")
    return QuarterRecord(period_end=period_end, source_line=line_no, **values)


def _parse_date(cell: str) -> date:
    parts = cell.split("-")
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise DataError(f"column period_end: not an ISO-8601 date: {cell!r}")
    year, month, day = (int(p) for p in parts)
    if not 1 <= month <= 12:
        raise DataError(f"column period_end: invalid month in {cell!r}")
    try:
        return date(year, month, day)
    except ValueError:
        raise DataError(f"column period_end: invalid day in {cell!r}") from None


def write_csv(records: list[QuarterRecord], path: str | Path) -> None:
    """Write records in canonical form: schema header, ISO dates, shortest
    round-trip float formatting, empty cells for None, LF endings.

    Loading a canonical file and writing it again reproduces it
    byte-for-byte.
    """
    path = Path(path)
    path.write_text(dumps_csv(records), encoding="utf-8")


def dumps_csv(records: list[QuarterRecord]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for record in records:
        cells = [record.period_end.isoformat()]
        for value in record.data_fields().values():
            cells.append("" if value is None else repr(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def align(records: list[QuarterRecord]) -> AlignedDataset:
    """Place records onto the uniform quarterly grid spanning their range.

    Two records in the same calendar quarter are a hard error naming both
    source lines; quarters with no record are kept in the grid and listed
    under ``missing``. Every populated cell traces to exactly one input
    record.
    """
    if not records:
        raise DataError("cannot align an empty record set")
    by_quarter: dict[int, QuarterRecord] = {}
    for record in records:
        idx = _quarter_index(record.period_end)
        if idx in by_quarter:
            first = by_quarter[idx]
            raise DataError(
                f"duplicate quarter {_quarter_label(idx)}: "
                f"lines {first.source_line} and {record.source_line}"
            )
        by_quarter[idx] = record

    lo, hi = min(by_quarter), max(by_quarter)
    periods: list[str] = []
    period_ends: list[date | None] = []
    columns: dict[str, list[float | None]] = {name: [] for name in CSV_COLUMNS[1:]}
    missing: list[str] = []
    for idx in range(lo, hi + 1):
        label = _quarter_label(idx)
        periods.append(label)
        record = by_quarter.get(idx)
        if record is None:
            missing.append(label)
            period_ends.append(None)
            for name in columns:
                columns[name].append(None)
        else:
            period_ends.append(record.period_end)
            for name, value in record.data_fields().items():
                columns[name].append(value)
    return AlignedDataset(periods=periods, period_ends=period_ends, columns=columns, missing=missing)


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled synthetic fixture CSV."""
    candidate = resources.files("buyback_eps").joinpath("data", name)
    with resources.as_file(candidate) as path:
        if not path.exists():
            raise DataError(f"no bundled fixture named {name!r}")
        return Path(path)


def _quarter_index(d: date) -> int:
    return d.year * 4 + (d.month - 1) // 3


def _quarter_label(idx: int) -> str:
    return f"{idx // 4}Q{idx % 4 + 1}"
