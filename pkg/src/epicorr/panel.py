"""Load, validate and align multi-region daily-count panels.

The canonical on-disk layout is a CSV whose first column is ``date``
(ISO-8601) followed by one column per region. Exports that put regions on
rows and dates on columns (the layout of the Mexican federal portal) are
read with ``layout="regions_as_rows"`` and a list of metadata columns to
drop.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateRegionError, GapError, NegativeValueError, ParseError, RangeError

LAYOUTS = ("dates_as_rows", "regions_as_rows")
_DATE_FORMATS = ("%Y-%m-%d", "%d-%m-%Y")


@dataclass(frozen=True, eq=False)
class TimeSeriesPanel:
    """N regions observed on D consecutive days.

    ``values[i]`` is the series of ``regions[i]``; row order is never
    changed by any operation in the package.
    """

    regions: tuple[str, ...]
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        regions = tuple(str(r) for r in self.regions)
        dates = tuple(self.dates)
        values = np.array(self.values, dtype=float, order="C")
        if values.ndim != 2 or values.shape != (len(regions), len(dates)):
            raise ParseError(
                f"values shape {values.shape} does not match {len(regions)} regions x {len(dates)} dates"
            )
        if len(regions) < 2:
            raise ParseError("a panel needs at least two regions")
        if len(dates) < 1:
            raise ParseError("a panel needs at least one date")
        seen = set()
        for r in regions:
            if r in seen:
                raise DuplicateRegionError(r)
            seen.add(r)
        _check_consecutive(dates)
        values.setflags(write=False)
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def series(self, region: str) -> np.ndarray:
        return self.values[self.regions.index(region)]

    def with_values(self, values: np.ndarray) -> "TimeSeriesPanel":
        return TimeSeriesPanel(self.regions, self.dates, values)

    def equals(self, other: "TimeSeriesPanel") -> bool:
        """Bit-exact equality of labels and values."""
        return (
            self.regions == other.regions
            and self.dates == other.dates
            and self.values.shape == other.values.shape
            and bool(np.all(self.values.view(np.uint64) == other.values.view(np.uint64)))
        )


def _check_consecutive(dates: Sequence[dt.date]) -> None:
    one = dt.timedelta(days=1)
    for a, b in zip(dates[:-1], dates[1:]):
        if b - a != one:
            raise GapError(a, b)


def parse_date(text: str) -> dt.date:
    text = text.strip()
    for fmt in _DATE_FORMATS:
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"not a date: {text!r}")


def _is_date(text: str) -> bool:
    try:
        parse_date(text)
    except ValueError:
        return False
    return True


def _parse_cell(text: str, row: int, column: str, clip_negative: bool, allow_negative: bool = False) -> float:
    cell = text.strip()
    if cell == "":
        raise ParseError("missing value", row=row, column=column)
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {cell!r}", row=row, column=column)
    if value < 0 and not allow_negative:
        if clip_negative:
            return 0.0
        raise NegativeValueError(f"negative count {cell}", row=row, column=column)
    return value


def _read_rows(path: Path) -> list[list[str]]:
    # newline="" lets csv handle LF and CRLF alike
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = [row for row in csv.reader(fh) if any(c.strip() for c in row)]
    if not rows:
        raise ParseError(f"{path}: empty file")
    return rows


def load_panel(
    path: str | Path,
    layout: str = "dates_as_rows",
    drop_columns: Iterable[str] = (),
    clip_negative_to_zero: bool = False,
    allow_negative: bool = False,
    drop_regions: Iterable[str] = (),
) -> TimeSeriesPanel:
    """Read a panel from a local CSV export.

    Parameters
    ----------
    path
        CSV file with a header row.
    layout
        ``"dates_as_rows"`` (canonical: ``date,<region>,<region>,...``) or
        ``"regions_as_rows"`` (``<name>,<meta>...,<date>,<date>,...``).
    drop_columns
        Header names of metadata columns to ignore (e.g. population).
    clip_negative_to_zero
        Replace negative counts (reporting revisions) by zero instead of
        raising :class:`NegativeValueError`.
    allow_negative
        Accept negative values as-is; used when re-reading filtered series.
    drop_regions
        Region names to leave out, e.g. a national-total row.

    Rows are 1-based data-row numbers in error messages (the header is row 0).
    """
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    path = Path(path)
    rows = _read_rows(path)
    header = [h.strip() for h in rows[0]]
    drop = {d.strip() for d in drop_columns}
    keep = [j for j, h in enumerate(header) if h not in drop]

    if layout == "dates_as_rows":
        label_col, value_cols = keep[0], keep[1:]
        regions = [header[j] for j in value_cols]
        dates = []
        values = np.empty((len(value_cols), len(rows) - 1))
        for r, row in enumerate(rows[1:], start=1):
            if len(row) < len(header):
                raise ParseError("short row", row=r)
            try:
                dates.append(parse_date(row[label_col]))
            except ValueError:
                raise ParseError(f"bad date {row[label_col]!r}", row=r, column=header[label_col]) from None
            for i, j in enumerate(value_cols):
                values[i, r - 1] = _parse_cell(row[j], r, header[j], clip_negative_to_zero, allow_negative)
    else:
        date_cols = [j for j in keep if _is_date(header[j])]
        label_cols = [j for j in keep if j not in date_cols]
        if not label_cols:
            raise ParseError("no region-name column found")
        label_col = label_cols[0]
        dates = [parse_date(header[j]) for j in date_cols]
        regions = []
        values = np.empty((len(rows) - 1, len(date_cols)))
        for r, row in enumerate(rows[1:], start=1):
            if len(row) < len(header):
                raise ParseError("short row", row=r)
            regions.append(row[label_col].strip())
            for t, j in enumerate(date_cols):
                values[r - 1, t] = _parse_cell(row[j], r, header[j], clip_negative_to_zero, allow_negative)

    dropped = {d.strip() for d in drop_regions}
    if dropped:
        missing = dropped.difference(regions)
        if missing:
            raise ParseError(f"drop_regions not found: {sorted(missing)}")
        keep_rows = [i for i, name in enumerate(regions) if name not in dropped]
        regions = [regions[i] for i in keep_rows]
        values = values[keep_rows]

    # region uniqueness is checked before date gaps so the more specific error wins
    seen = set()
    for name in regions:
        if name in seen:
            raise DuplicateRegionError(name)
        seen.add(name)
    return TimeSeriesPanel(tuple(regions), tuple(dates), values)


def save_panel(panel: TimeSeriesPanel, path: str | Path) -> None:
    """Write the canonical layout; ``load_panel`` reads it back bit-exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *panel.regions])
        for t, day in enumerate(panel.dates):
            writer.writerow([day.isoformat(), *(repr(float(v)) for v in panel.values[:, t])])


def slice_panel(panel: TimeSeriesPanel, start: dt.date, end: dt.date) -> TimeSeriesPanel:
    """Inclusive date-range sub-panel."""
    if start > end:
        raise RangeError(f"start {start} after end {end}")
    first, last = panel.dates[0], panel.dates[-1]
    if start < first or end > last:
        raise RangeError(f"[{start}, {end}] outside panel range [{first}, {last}]")
    i0 = (start - first).days
    i1 = (end - first).days + 1
    return TimeSeriesPanel(panel.regions, panel.dates[i0:i1], panel.values[:, i0:i1])
