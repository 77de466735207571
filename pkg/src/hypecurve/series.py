"""Yearly count series: CSV ingestion, validation, averaging, normalization.

The on-disk format is minimal CSV: ``year,count`` rows with a ``.`` decimal
point, an optional single header row, and LF or CRLF line endings.
A validated series has strictly consecutive years (interior gaps are filled
with zero counts and a warning), non-negative finite counts, and at least
three points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SeriesError",
    "EmptyInput",
    "MalformedRow",
    "NegativeCount",
    "DuplicateYear",
    "TooFewPoints",
    "EmptySourceList",
    "LabelMismatch",
    "ZeroMax",
    "YearSeries",
    "NormalizedPair",
    "parse_csv",
    "serialize_csv",
    "average_sources",
    "normalize_pair",
    "total",
]

MIN_POINTS = 3


class SeriesError(ValueError):
    """Base class for series ingestion and validation errors."""


class EmptyInput(SeriesError):
    pass


class MalformedRow(SeriesError):
    def __init__(self, row: int, detail: str):
        super().__init__(f"row {row}: {detail}")
        self.row = row


class NegativeCount(SeriesError):
    def __init__(self, row: int, value: float):
        super().__init__(f"row {row}: negative count {value}")
        self.row = row


class DuplicateYear(SeriesError):
    def __init__(self, year: int):
        super().__init__(f"duplicate year {year}")
        self.year = year


class TooFewPoints(SeriesError):
    pass


class EmptySourceList(SeriesError):
    pass


class LabelMismatch(SeriesError):
    pass


class ZeroMax(SeriesError):
    pass


@dataclass(frozen=True)
class YearSeries:
    """Ordered yearly counts for one indicator.

    Years are consecutive integers; counts are non-negative finite reals
    (fractional counts appear after averaging).  ``warnings`` records
    non-fatal ingestion notes (e.g. gap filling) and does not participate
    in equality.
    """

    label: str
    years: tuple[int, ...]
    counts: tuple[float, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.years) != len(self.counts):
            raise SeriesError("years and counts length mismatch")
        if len(self.years) < MIN_POINTS:
            raise TooFewPoints(f"need at least {MIN_POINTS} points, got {len(self.years)}")
        for a, b in zip(self.years, self.years[1:]):
            if b != a + 1:
                raise SeriesError(f"years must be consecutive, got {a} then {b}")
        for y, c in zip(self.years, self.counts):
            if not np.isfinite(c):
                raise SeriesError(f"non-finite count at year {y}")
            if c < 0:
                raise SeriesError(f"negative count at year {y}")

    @property
    def first_year(self) -> int:
        return self.years[0]

    @property
    def last_year(self) -> int:
        return self.years[-1]

    @property
    def max_count(self) -> float:
        return max(self.counts)

    def points(self) -> list[tuple[int, float]]:
        return list(zip(self.years, self.counts))

    def years_array(self) -> np.ndarray:
        return np.asarray(self.years, dtype=float)

    def counts_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float)


@dataclass(frozen=True)
class NormalizedPair:
    """Publication/patent series rescaled for joint display.

    The maximum yearly publication count maps to 1.0 and the maximum
    yearly patent count to 0.5.  The multiplicative scales are recorded so
    raw counts stay recoverable (raw = scaled / scale).
    """

    publications: YearSeries
    patents: YearSeries
    pub_scale: float
    pat_scale: float


def _parse_count(text: str, row: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(row, f"non-numeric count {text!r}") from None
    if not np.isfinite(value):
        raise MalformedRow(row, f"non-finite count {text!r}")
    if value < 0:
        raise NegativeCount(row, value)
    return value


def parse_csv(source, label: str = "series") -> YearSeries:
    """Parse ``year,count`` CSV text into a validated YearSeries.

    ``source`` is a string or a file-like object.  A single leading header
    row is skipped when its first field is non-numeric.  Rows are sorted by
    year; interior missing years are filled with count 0 and a warning.

    Raises EmptyInput, MalformedRow, NegativeCount, DuplicateYear, or
    TooFewPoints.
    """
    text = source.read() if hasattr(source, "read") else source
    lines = text.replace("\r\n", "\n").split("\n")

    rows: list[tuple[int, float]] = []
    warnings: list[str] = []
    for idx, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise MalformedRow(idx, f"expected 2 fields, got {len(fields)}")
        if not rows and idx == 1:
            try:
                float(fields[0])
            except ValueError:
                continue  # header row
        try:
            year = int(fields[0])
        except ValueError:
            raise MalformedRow(idx, f"non-integer year {fields[0]!r}") from None
        rows.append((year, _parse_count(fields[1], idx)))

    if not rows:
        raise EmptyInput("no data rows")

    rows.sort(key=lambda yc: yc[0])
    seen: dict[int, float] = {}
    for year, count in rows:
        if year in seen:
            raise DuplicateYear(year)
        seen[year] = count

    years = list(range(rows[0][0], rows[-1][0] + 1))
    missing = [y for y in years if y not in seen]
    if missing:
        warnings.append(f"filled {len(missing)} missing year(s) with zero counts: {missing}")
    counts = [seen.get(y, 0.0) for y in years]
    return YearSeries(label, tuple(years), tuple(counts), tuple(warnings))


def _format_count(value: float) -> str:
    # Up to 6 decimal places, trailing zeros trimmed; integers stay plain.
    if float(value).is_integer():
        return str(int(value))
    return f"{value:.6f}".rstrip("0").rstrip(".")


def serialize_csv(series: YearSeries) -> str:
    """Serialize to the external CSV format (header, ascending years, LF)."""
    lines = ["year,count"]
    lines.extend(f"{y},{_format_count(c)}" for y, c in zip(series.years, series.counts))
    return "\n".join(lines) + "\n"


def average_sources(sources: Sequence[YearSeries]) -> YearSeries:
    """Average several sources of the same indicator year by year.

    Each year in the union of the sources' year ranges gets the arithmetic
    mean over the sources that cover it.  Years covered by no source (gaps
    between disjoint ranges) are filled with zero and a warning, matching
    the parse-time gap rule.
    """
    if not sources:
        raise EmptySourceList("at least one source series required")
    label = sources[0].label
    for s in sources[1:]:
        if s.label != label:
            raise LabelMismatch(f"label {s.label!r} does not match {label!r}")

    first = min(s.first_year for s in sources)
    last = max(s.last_year for s in sources)
    years = list(range(first, last + 1))
    counts: list[float] = []
    uncovered: list[int] = []
    for y in years:
        covering = [s.counts[y - s.first_year] for s in sources if s.first_year <= y <= s.last_year]
        if covering:
            counts.append(sum(covering) / len(covering))
        else:
            uncovered.append(y)
            counts.append(0.0)
    warnings = []
    if uncovered:
        warnings.append(f"filled {len(uncovered)} year(s) covered by no source with zero: {uncovered}")
    return YearSeries(label, tuple(years), tuple(counts), tuple(warnings))


def normalize_pair(publications: YearSeries, patents: YearSeries) -> NormalizedPair:
    """Rescale so the publication maximum is 1.0 and the patent maximum 0.5."""
    pub_max = publications.max_count
    pat_max = patents.max_count
    if pub_max <= 0:
        raise ZeroMax("publication series is identically zero")
    if pat_max <= 0:
        raise ZeroMax("patent series is identically zero")
    # Dividing by the max makes the scaled maximum land exactly on the target.
    pub_scaled = tuple(c / pub_max for c in publications.counts)
    pat_scaled = tuple(0.5 * (c / pat_max) for c in patents.counts)
    return NormalizedPair(
        publications=YearSeries(publications.label, publications.years, pub_scaled),
        patents=YearSeries(patents.label, patents.years, pat_scaled),
        pub_scale=1.0 / pub_max,
        pat_scale=0.5 / pat_max,
    )


def total(series: YearSeries) -> float:
    """Sum of the series counts."""
    return float(sum(series.counts))
