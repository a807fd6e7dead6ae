"""UP/DOWN response labels from quarter-end index levels.

The broad-market label is the sign of the annualized one-quarter
forward return; a sector label is the sign of the sector's annualized
forward return less the broad market's. Zero maps to DOWN: UP means
strictly positive forward movement, and ties must land deterministically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DataError
from .features import BROAD_SCOPE, Scope
from .quarters import Quarter, QuarterlySeries


class Label(enum.Enum):
    UP = "UP"
    DOWN = "DOWN"

    @property
    def sign(self) -> int:
        return 1 if self is Label.UP else -1


def label_of(value: float) -> Label:
    return Label.UP if value > 0.0 else Label.DOWN


def _price_pair(prices: QuarterlySeries, t: Quarter) -> tuple:
    p0 = prices.get(t)
    p1 = prices.get(t + 1)
    if p0 is None or p1 is None:
        raise DataError(f"forward return at {t} needs prices at {t} and {t + 1}")
    return p0, p1


def simple_forward_return(prices: QuarterlySeries, t: Quarter) -> float:
    """One-quarter forward return in percent: 100 (P(t+1)/P(t) - 1)."""
    p0, p1 = _price_pair(prices, t)
    return 100.0 * (p1 / p0 - 1.0)


def ann_forward_return(prices: QuarterlySeries, t: Quarter) -> float:
    """Annualized forward return in percent: 100 ((P(t+1)/P(t))^4 - 1)."""
    p0, p1 = _price_pair(prices, t)
    return 100.0 * ((p1 / p0) ** 4 - 1.0)


def sector_spread(sector_prices: QuarterlySeries, market_prices: QuarterlySeries, t: Quarter) -> float:
    """Sector annualized forward return less the market's, in percent points."""
    return ann_forward_return(sector_prices, t) - ann_forward_return(market_prices, t)


@dataclass(frozen=True)
class ResponseLabel:
    """Label for quarter t, decided by prices through the end of t+1."""

    quarter: Quarter
    scope: Scope
    ann_forward_return: float
    y: Label
    spread: float | None = None

    def __post_init__(self):
        decided_by = self.ann_forward_return if self.scope.is_broad else self.spread
        if decided_by is None:
            raise ValueError("sector labels need a spread")
        if self.y is not label_of(decided_by):
            raise ValueError(f"label {self.y} contradicts its return {decided_by!r}")


def broad_label(prices: QuarterlySeries, t: Quarter) -> ResponseLabel:
    ret = ann_forward_return(prices, t)
    return ResponseLabel(t, BROAD_SCOPE, ret, label_of(ret))


def sector_label(
    sector_prices: QuarterlySeries,
    market_prices: QuarterlySeries,
    t: Quarter,
    scope: Scope,
) -> ResponseLabel:
    spread = sector_spread(sector_prices, market_prices, t)
    ret = ann_forward_return(sector_prices, t)
    return ResponseLabel(t, scope, ret, label_of(spread), spread=spread)


def _labelable(t: Quarter, series_list) -> bool:
    return all(s.get(t) is not None and s.get(t + 1) is not None for s in series_list)


def build_labels(
    scope: Scope,
    market_prices: QuarterlySeries,
    sector_prices: QuarterlySeries | None = None,
    first: Quarter | None = None,
    last: Quarter | None = None,
) -> list:
    """Labels for every quarter where the needed prices exist.

    The label at t consumes P(t+1), so the final covered quarter of the
    price history is never labeled; callers wanting the last feature
    quarter labeled must supply one extra trailing price.
    """
    if not scope.is_broad and sector_prices is None:
        raise DataError(f"sector scope {scope.name} needs sector prices")
    needed = [market_prices] if scope.is_broad else [market_prices, sector_prices]
    lo = max(s.start for s in needed)
    hi = min(s.end for s in needed) - 1
    if first is not None and first > lo:
        lo = first
    if last is not None and last < hi:
        hi = last
    labels = []
    t = lo
    while t <= hi:
        if _labelable(t, needed):
            if scope.is_broad:
                labels.append(broad_label(market_prices, t))
            else:
                labels.append(sector_label(sector_prices, market_prices, t, scope))
        t = t + 1
    return labels


def labels_by_quarter(labels) -> dict:
    return {lab.quarter: lab for lab in labels}


def write_labels_table(labels, stream):
    """Audit table: one row per labeled quarter, 6-decimal fixed."""
    stream.write("scope,quarter_end,ann_forward_return,spread,label\n")
    for lab in labels:
        spread = "NA" if lab.spread is None else f"{lab.spread:.6f}"
        stream.write(
            f"{lab.scope.name},{lab.quarter.end_date().isoformat()},"
            f"{lab.ann_forward_return:.6f},{spread},{lab.y.value}\n"
        )
