"""Forward-return labels from price series."""

import io
import random

import pytest

from pesignal.errors import DataError
from pesignal.features import BROAD_SCOPE, Scope
from pesignal.quarters import Quarter, QuarterlySeries
from pesignal.response import (
    Label,
    ann_forward_return,
    broad_label,
    build_labels,
    label_of,
    sector_label,
    sector_spread,
    simple_forward_return,
    write_labels_table,
)

START = Quarter(2002, 4)

# Three consecutive quarter-end index levels; the middle step loses
# about 3 percent and the next gains about 16.
LEVELS = (66.43170, 64.41500, 74.60800)


def prices(*values, start=START):
    return QuarterlySeries(start, tuple(values))


def prices_with_ann_return(ann_pct, start=START, base=100.0):
    """Two-quarter series whose annualized forward return is ann_pct."""
    ratio = (1.0 + ann_pct / 100.0) ** 0.25
    return QuarterlySeries(start, (base, base * ratio))


class TestForwardReturns:
    def test_quarterly_returns(self):
        p = prices(*LEVELS)
        assert simple_forward_return(p, START) == pytest.approx(-3.04, abs=0.005)
        assert simple_forward_return(p, START + 1) == pytest.approx(15.82, abs=0.005)

    def test_annualized_returns(self):
        p = prices(*LEVELS)
        assert ann_forward_return(p, START) == pytest.approx(-11.60, abs=0.005)
        assert ann_forward_return(p, START + 1) == pytest.approx(79.97, abs=0.005)

    def test_flat_price(self):
        p = prices(50.0, 50.0)
        assert simple_forward_return(p, START) == 0.0
        assert ann_forward_return(p, START) == 0.0

    def test_missing_next_price(self):
        p = prices(*LEVELS)
        with pytest.raises(DataError):
            ann_forward_return(p, START + 2)
        with pytest.raises(DataError):
            ann_forward_return(p, START - 1)

    def test_signs_agree(self):
        rng = random.Random(23)
        for _ in range(200):
            p = prices(rng.uniform(10, 200), rng.uniform(10, 200))
            simple = simple_forward_return(p, START)
            annual = ann_forward_return(p, START)
            assert label_of(simple) is label_of(annual)

    def test_rescaling_invariance(self):
        rng = random.Random(29)
        values = [rng.uniform(50, 150) for _ in range(6)]
        for c in (0.01, 3.0, 1e4):
            scaled = prices(*(c * v for v in values))
            plain = prices(*values)
            for k in range(5):
                assert ann_forward_return(scaled, START + k) == pytest.approx(
                    ann_forward_return(plain, START + k), rel=1e-12
                )


class TestBroadLabel:
    def test_down_then_up(self):
        p = prices(*LEVELS)
        assert broad_label(p, START).y is Label.DOWN
        assert broad_label(p, START + 1).y is Label.UP

    def test_signs(self):
        assert Label.DOWN.sign == -1
        assert Label.UP.sign == 1

    def test_zero_return_is_down(self):
        assert broad_label(prices(50.0, 50.0), START).y is Label.DOWN


class TestSectorSpread:
    def test_spread_values(self):
        market_down = prices_with_ann_return(-11.60)
        sector_down = prices_with_ann_return(-17.90)
        assert sector_spread(sector_down, market_down, START) == pytest.approx(-6.30, abs=0.005)

        market_up = prices_with_ann_return(79.97)
        sector_up = prices_with_ann_return(124.67)
        assert sector_spread(sector_up, market_up, START) == pytest.approx(44.70, abs=0.005)

    def test_spread_labels(self):
        scope = Scope("Communications")
        lab = sector_label(
            prices_with_ann_return(-17.90), prices_with_ann_return(-11.60), START, scope
        )
        assert lab.y is Label.DOWN
        assert lab.spread == pytest.approx(-6.30, abs=0.005)
        lab = sector_label(
            prices_with_ann_return(124.67), prices_with_ann_return(79.97), START, scope
        )
        assert lab.y is Label.UP

    def test_equal_returns_down(self):
        p = prices(*LEVELS)
        lab = sector_label(p, p, START, Scope("Finance"))
        assert lab.spread == 0.0
        assert lab.y is Label.DOWN

    def test_antisymmetry(self):
        rng = random.Random(31)
        a = prices(rng.uniform(10, 100), rng.uniform(10, 100))
        b = prices(rng.uniform(10, 100), rng.uniform(10, 100))
        assert sector_spread(a, b, START) == pytest.approx(-sector_spread(b, a, START), abs=1e-12)


class TestBuildLabels:
    def test_broad_coverage(self):
        p = prices(*LEVELS)
        labels = build_labels(BROAD_SCOPE, p)
        assert [lab.quarter for lab in labels] == [START, START + 1]
        assert [lab.y for lab in labels] == [Label.DOWN, Label.UP]

    def test_sector_needs_both_series(self):
        market = prices(*LEVELS)
        sector = prices(100.0, 90.0, start=START + 1)
        labels = build_labels(Scope("Finance"), market, sector)
        assert [lab.quarter for lab in labels] == [START + 1]
        with pytest.raises(DataError):
            build_labels(Scope("Finance"), market)

    def test_quarter_bounds(self):
        p = prices(*LEVELS, 80.0, 85.0)
        labels = build_labels(BROAD_SCOPE, p, first=START + 1, last=START + 2)
        assert [lab.quarter for lab in labels] == [START + 1, START + 2]

    def test_label_consistency_enforced(self):
        with pytest.raises(ValueError):
            from pesignal.response import ResponseLabel

            ResponseLabel(START, BROAD_SCOPE, -5.0, Label.UP)

    def test_write_table(self):
        p = prices(*LEVELS)
        out = io.StringIO()
        write_labels_table(build_labels(BROAD_SCOPE, p), out)
        lines = out.getvalue().splitlines()
        assert lines[0] == "scope,quarter_end,ann_forward_return,spread,label"
        assert lines[1].startswith("Market,2002-12-31,-11.60")
        assert lines[1].endswith(",NA,DOWN")
        assert lines[2].endswith(",NA,UP")
