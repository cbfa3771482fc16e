"""Time series container with CSV input and lag windows.

All time indices in the public API are 1-based (``t = 1..T``) to match the
usual notation for observed series.  Array positions inside the numerical
kernels stay 0-based.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class SeriesError(ValueError):
    """Raised for malformed series input."""


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _parse_stamp(label: str) -> datetime:
    return datetime.fromisoformat(label.strip().replace("Z", "+00:00"))


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real-valued series.

    ``values`` is stored as a read-only float array.  Timestamps are kept as
    labels only and never enter any numerical formula.
    """

    values: np.ndarray
    timestamps: Optional[tuple] = None
    name: str = "x"

    def __post_init__(self):
        values = _readonly(self.values)
        if values.ndim != 1 or values.size < 1:
            raise SeriesError("a series needs at least one value")
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise SeriesError(f"non-finite value at index {int(bad[0]) + 1}")
        object.__setattr__(self, "values", values)
        if self.timestamps is not None:
            stamps = tuple(str(s) for s in self.timestamps)
            if len(stamps) != values.size:
                raise SeriesError(
                    f"got {len(stamps)} timestamps for {values.size} values")
            _check_increasing(stamps)
            object.__setattr__(self, "timestamps", stamps)

    def __len__(self) -> int:
        return self.values.size

    def replace(self, values) -> "TimeSeries":
        """Same labels, new values."""
        return TimeSeries(values, self.timestamps, self.name)

    def slice(self, start: int, stop: int) -> "TimeSeries":
        """Sub-series for the 1-based inclusive range ``[start, stop]``."""
        if not 1 <= start <= stop <= len(self):
            raise SeriesError(f"range [{start}, {stop}] outside 1..{len(self)}")
        stamps = None
        if self.timestamps is not None:
            stamps = self.timestamps[start - 1:stop]
        return TimeSeries(self.values[start - 1:stop], stamps, self.name)


def _check_increasing(stamps: Sequence[str]) -> None:
    try:
        parsed = [_parse_stamp(s) for s in stamps]
    except ValueError as exc:
        raise SeriesError(f"unparseable timestamp: {exc}") from None
    for i in range(1, len(parsed)):
        if not parsed[i] > parsed[i - 1]:
            raise SeriesError(
                f"timestamps not strictly increasing at row {i + 1}: "
                f"{stamps[i - 1]!r} -> {stamps[i]!r}")


def load_csv(path, value_column: str, timestamp_column: Optional[str] = None,
             name: Optional[str] = None) -> TimeSeries:
    """Read one column of a comma-separated file into a :class:`TimeSeries`.

    Rows are kept in file order.  Any cell that is not a finite number is a
    load error; the message reports the 1-based data row.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(
            (line for line in fh if not line.startswith("#")))
        header = reader.fieldnames or []
        for col in (value_column, timestamp_column):
            if col is not None and col not in header:
                raise SeriesError(f"column {col!r} not in {header}")
        values, stamps = [], []
        for row_no, row in enumerate(reader, start=1):
            cell = (row.get(value_column) or "").strip()
            try:
                v = float(cell)
            except ValueError:
                raise SeriesError(
                    f"row {row_no}: cannot parse {cell!r} in column "
                    f"{value_column!r}") from None
            if not math.isfinite(v):
                raise SeriesError(f"row {row_no}: non-finite value {cell!r}")
            values.append(v)
            if timestamp_column is not None:
                stamps.append((row.get(timestamp_column) or "").strip())
    if not values:
        raise SeriesError(f"{path} has no data rows")
    return TimeSeries(np.asarray(values), tuple(stamps) if stamps else None,
                      name or value_column)


def to_csv(series: TimeSeries, path, header_lines: Sequence[str] = ()) -> None:
    """Write ``series`` so that :func:`load_csv` reads it back bit-exactly."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        if series.timestamps is None:
            writer.writerow(["t", series.name])
            for i, v in enumerate(series.values, start=1):
                writer.writerow([i, repr(float(v))])
        else:
            writer.writerow(["t", "timestamp", series.name])
            for i, (s, v) in enumerate(zip(series.timestamps, series.values),
                                       start=1):
                writer.writerow([i, s, repr(float(v))])


def log_transform(series: TimeSeries) -> TimeSeries:
    """Natural log of a strictly positive series (log prices)."""
    bad = np.flatnonzero(series.values <= 0)
    if bad.size:
        raise SeriesError(
            f"log of nonpositive value at index {int(bad[0]) + 1}")
    return series.replace(np.log(series.values))


def window(series, t: int, tau: int) -> np.ndarray:
    """Return ``(x(t-tau+1), ..., x(t))`` for 1-based ``t``."""
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series)
    if tau < 1 or t - tau + 1 < 1 or t > values.size:
        raise SeriesError(
            f"window t={t}, tau={tau} outside series of length {values.size}")
    return np.array(values[t - tau:t])


def interior(n: int, keep: float = 0.8) -> slice:
    """Slice keeping the central ``keep`` fraction of ``n`` samples."""
    cut = int(math.floor(n * (1.0 - keep) / 2.0 + 1e-9))
    return slice(cut, n - cut)
