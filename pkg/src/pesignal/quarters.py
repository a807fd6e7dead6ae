"""Calendar-quarter arithmetic and aligned quarterly series.

Quarters are keyed by (year, index) and identified with their end date
(2004Q3 <-> 2004-09-30). All joins are exact on (year, index), never on
raw dates. Missing observations are explicit None markers, never
sentinel numbers.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass
from datetime import date

from .errors import DataError

_QUARTER_END = {1: (3, 31), 2: (6, 30), 3: (9, 30), 4: (12, 31)}

_QUARTER_RE = re.compile(r"^(\d{4})\s*[Qq]\s*([1-4])$")


@functools.total_ordering
@dataclass(frozen=True)
class Quarter:
    """One calendar quarter, e.g. Quarter(2004, 3) ending 2004-09-30."""

    year: int
    index: int

    def __post_init__(self):
        if self.index not in (1, 2, 3, 4):
            raise ValueError(f"quarter index must be 1..4, got {self.index}")

    def __lt__(self, other: "Quarter") -> bool:
        return (self.year, self.index) < (other.year, other.index)

    def __add__(self, quarters: int) -> "Quarter":
        if not isinstance(quarters, int):
            return NotImplemented
        n = (self.year * 4 + (self.index - 1)) + quarters
        return Quarter(n // 4, n % 4 + 1)

    def __sub__(self, other):
        """Quarter - int -> Quarter; Quarter - Quarter -> signed quarter offset."""
        if isinstance(other, int):
            return self + (-other)
        if isinstance(other, Quarter):
            return (self.year * 4 + self.index) - (other.year * 4 + other.index)
        return NotImplemented

    def next(self) -> "Quarter":
        return self + 1

    def prev(self) -> "Quarter":
        return self - 1

    def end_date(self) -> date:
        month, day = _QUARTER_END[self.index]
        return date(self.year, month, day)

    @classmethod
    def of_date(cls, d: date) -> "Quarter":
        return cls(d.year, (d.month - 1) // 3 + 1)

    @classmethod
    def parse(cls, text: str) -> "Quarter":
        """Accepts '2004Q3' or an ISO date inside the quarter ('2004-09-30')."""
        text = text.strip()
        m = _QUARTER_RE.match(text)
        if m:
            return cls(int(m.group(1)), int(m.group(2)))
        try:
            return cls.of_date(date.fromisoformat(text))
        except ValueError:
            raise DataError(f"cannot parse quarter from {text!r}") from None

    def __str__(self) -> str:
        return f"{self.year}Q{self.index}"


def quarter_end_date(quarter: Quarter) -> date:
    """Last calendar day of the quarter."""
    return quarter.end_date()


def quarter_count(first: Quarter, last: Quarter) -> int:
    """Number of quarters from first to last inclusive."""
    if first > last:
        raise DataError(f"quarter range reversed: {first} > {last}")
    return (last - first) + 1


def quarter_range(first: Quarter, last: Quarter) -> list[Quarter]:
    return [first + k for k in range(quarter_count(first, last))]


@dataclass(frozen=True)
class QuarterlySeries:
    """Gap-free quarterly observations; values[k] belongs to start + k.

    A value may be None (missing); present values must be finite.
    """

    start: Quarter
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        for k, v in enumerate(self.values):
            if v is None:
                continue
            if not math.isfinite(v):
                raise ValueError(f"non-finite value at {self.start + k}: {v!r}")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> Quarter:
        if not self.values:
            raise ValueError("empty series has no end quarter")
        return self.start + (len(self.values) - 1)

    def covers(self, quarter: Quarter) -> bool:
        offset = quarter - self.start
        return 0 <= offset < len(self.values)

    def get(self, quarter: Quarter):
        """Value at the quarter, or None when missing or out of range."""
        offset = quarter - self.start
        if 0 <= offset < len(self.values):
            return self.values[offset]
        return None

    def at(self, quarter: Quarter) -> float:
        """Value at the quarter; raises when absent."""
        v = self.get(quarter)
        if v is None:
            raise DataError(f"no value at {quarter}")
        return v

    def quarters(self) -> list[Quarter]:
        return [self.start + k for k in range(len(self.values))]

    def items(self):
        return [(self.start + k, v) for k, v in enumerate(self.values)]

    @classmethod
    def from_items(cls, items) -> "QuarterlySeries":
        """Build from (quarter, value) pairs; quarters must be consecutive."""
        items = sorted(items, key=lambda kv: (kv[0].year, kv[0].index))
        if not items:
            raise DataError("cannot build a series from no observations")
        start = items[0][0]
        values = []
        for k, (q, v) in enumerate(items):
            if q - start != k:
                raise DataError(f"non-contiguous quarters: gap or duplicate at {q}")
            values.append(v)
        return cls(start, tuple(values))


def align(series_list) -> list:
    """Inner-join series on quarter.

    Returns [(quarter, (v0, v1, ...)), ...] for quarters covered by every
    series, in quarter order. Raises when the intersection is empty.
    """
    series_list = list(series_list)
    if not series_list or any(len(s) == 0 for s in series_list):
        raise DataError("align requires nonempty series")
    first = max(s.start for s in series_list)
    last = min(s.end for s in series_list)
    if first > last:
        raise DataError("no overlapping history between series")
    return [
        (q, tuple(s.get(q) for s in series_list))
        for q in quarter_range(first, last)
    ]
