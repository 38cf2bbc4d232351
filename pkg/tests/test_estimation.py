"""Tests for moment estimation, risk-aversion extraction and trend diagnostics."""

import logging
import math

import numpy as np
import pytest

from src.core.errors import (
    AlignmentError,
    DegenerateError,
    InsufficientData,
    ParseError,
    ValidationError,
)
from src.core.estimation import (
    ROLLING_WINDOWS,
    MarketRecord,
    MomentEntry,
    MomentSeries,
    RiskAversionPoint,
    Scheme,
    YearMonth,
    classify_trend,
    diagnose,
    estimate_moments,
    expanding_moments,
    pearson_correlation,
    per_period_rf,
    restrict_dates,
    risk_aversion_series,
    rolling_moments,
    split_rra_at,
)
from src.core.synthetic import month_range
from src.core.utility import Trend

from .conftest import dated


def _records(n, cap=30.0, rf=0.024, start=YearMonth(2000, 1)):
    return [MarketRecord(d, 0.01, cap, rf) for d in month_range(start, n)]


def _single_entry(mu, sigma, date=YearMonth(2000, 1)):
    return MomentSeries((MomentEntry(date, mu, sigma),), Scheme("expanding", 2))


# ---------------------------------------------------------------------------
# Dates and schemes
# ---------------------------------------------------------------------------

class TestYearMonth:
    """YYYY-MM parsing and ordering."""

    def test_parse_and_format(self):
        ym = YearMonth.parse("2008-09")
        assert ym == YearMonth(2008, 9)
        assert str(ym) == "2008-09"

    @pytest.mark.parametrize("text", ["2008-9", "08-09", "2008/09", "2008-13", "2008-00", "abcd-ef", ""])
    def test_parse_rejects(self, text):
        with pytest.raises(ParseError):
            YearMonth.parse(text)

    def test_ordering(self):
        assert YearMonth(2007, 12) < YearMonth(2008, 1)

    def test_month_range_wraps_year(self):
        assert month_range(YearMonth(2007, 11), 3) == [
            YearMonth(2007, 11), YearMonth(2007, 12), YearMonth(2008, 1),
        ]


class TestMarketRecord:
    """Per-period value invariants."""

    def test_return_at_minus_one_rejected(self):
        with pytest.raises(ValidationError):
            MarketRecord(YearMonth(2000, 1), -1.0, 10.0, 0.03)

    def test_return_below_minus_one_rejected(self):
        with pytest.raises(ValidationError):
            MarketRecord(YearMonth(2000, 1), -1.5, 10.0, 0.03)

    def test_zero_cap_rejected(self):
        with pytest.raises(ValidationError):
            MarketRecord(YearMonth(2000, 1), 0.01, 0.0, 0.03)

    def test_nan_rf_rejected(self):
        with pytest.raises(ValidationError):
            MarketRecord(YearMonth(2000, 1), 0.01, 10.0, float("nan"))


class TestScheme:
    """expanding:<min_obs> / rolling:<M> text form."""

    def test_parse_expanding(self):
        assert Scheme.parse("expanding:24") == Scheme("expanding", 24)

    def test_parse_bare_expanding_uses_default(self):
        assert Scheme.parse("expanding") == Scheme("expanding", 24)

    def test_parse_rolling(self):
        s = Scheme.parse("rolling:60")
        assert s == Scheme("rolling", 60)
        assert str(s) == "rolling:60"

    @pytest.mark.parametrize("text", ["rolling", "rolling:abc", "window:5"])
    def test_parse_rejects(self, text):
        with pytest.raises((ParseError, ValidationError)):
            Scheme.parse(text)

    def test_size_at_least_two(self):
        with pytest.raises(ValidationError):
            Scheme("rolling", 1)


# ---------------------------------------------------------------------------
# Moment estimation
# ---------------------------------------------------------------------------

class TestExpandingMoments:
    """Recursive estimation over all data up to t."""

    def test_two_point_sample(self):
        series = expanding_moments(dated([0.01, 0.03]), min_obs=2)
        assert len(series.entries) == 1
        entry = series.entries[0]
        assert entry.mu == pytest.approx(0.02)
        assert entry.sigma == pytest.approx(math.sqrt(0.0002))
        assert series.scheme == Scheme("expanding", 2)

    def test_constant_returns(self):
        series = expanding_moments(dated([0.007] * 30), min_obs=24)
        assert len(series.entries) == 7
        for entry in series.entries:
            assert entry.mu == pytest.approx(0.007)
            assert entry.sigma == pytest.approx(0.0, abs=1e-15)

    def test_entry_count_and_dates(self):
        returns = dated(list(np.linspace(-0.01, 0.02, 40)))
        series = expanding_moments(returns, min_obs=24)
        assert len(series.entries) == 40 - 24 + 1
        assert series.entries[0].date == returns[23][0]
        assert series.entries[-1].date == returns[-1][0]

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            expanding_moments(dated([0.01] * 10), min_obs=24)

    def test_non_increasing_dates(self):
        returns = [(YearMonth(2000, 2), 0.01), (YearMonth(2000, 1), 0.02), (YearMonth(2000, 3), 0.0)]
        with pytest.raises(ValidationError):
            expanding_moments(returns, min_obs=2)

    def test_duplicate_dates(self):
        returns = [(YearMonth(2000, 1), 0.01), (YearMonth(2000, 1), 0.02)]
        with pytest.raises(ValidationError):
            expanding_moments(returns, min_obs=2)

    def test_last_entry_uses_whole_sample(self):
        values = [0.01, -0.02, 0.015, 0.03, -0.005, 0.0]
        last = expanding_moments(dated(values), min_obs=2).entries[-1]
        assert last.mu == pytest.approx(np.mean(values))
        assert last.sigma == pytest.approx(np.std(values, ddof=1))


class TestRollingMoments:
    """Fixed-length trailing windows."""

    def test_whole_sample_window(self):
        values = [0.01, -0.02, 0.015, 0.03]
        series = rolling_moments(dated(values), 4)
        assert len(series.entries) == 1
        assert series.entries[0].mu == pytest.approx(np.mean(values))

    def test_count_contract(self):
        assert len(rolling_moments(dated([0.01 * (i % 3) for i in range(61)]), 60).entries) == 2

    def test_alternating_window(self):
        series = rolling_moments(dated([0.02, -0.02, 0.02, -0.02]), 4)
        assert series.entries[0].mu == pytest.approx(0.0, abs=1e-15)
        assert series.entries[0].sigma == pytest.approx(math.sqrt(4 * 0.0004 / 3))

    def test_window_longer_than_data(self):
        with pytest.raises(InsufficientData):
            rolling_moments(dated([0.01] * 59), 60)

    @pytest.mark.parametrize("window", ROLLING_WINDOWS)
    def test_rolling_counts_on_long_series(self, window):
        rng = np.random.default_rng(3)
        returns = dated(list(rng.normal(0.005, 0.04, 372)))
        assert len(rolling_moments(returns, window).entries) == 372 - window + 1

    def test_rolling_full_window_matches_expanding_last(self):
        rng = np.random.default_rng(4)
        returns = dated(list(rng.normal(0.005, 0.04, 50)))
        rolled = rolling_moments(returns, 50).entries[0]
        expanded = expanding_moments(returns, 24).entries[-1]
        assert rolled == expanded

    def test_estimate_moments_dispatch(self):
        returns = dated([0.01, -0.01, 0.02, 0.0, 0.01])
        assert estimate_moments(returns, Scheme("rolling", 3)) == rolling_moments(returns, 3)
        assert estimate_moments(returns, Scheme("expanding", 2)) == expanding_moments(returns, 2)

    def test_bit_identical_reruns(self):
        rng = np.random.default_rng(5)
        returns = dated(list(rng.normal(0.005, 0.04, 120)))
        assert rolling_moments(returns, 60) == rolling_moments(list(returns), 60)


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

class TestPerPeriodRiskFree:
    """Annual yield to per-period rate."""

    def test_simple(self):
        assert per_period_rf(0.12, "simple") == pytest.approx(0.01)

    def test_geometric(self):
        assert per_period_rf(0.12, "geometric") == pytest.approx(1.12 ** (1 / 12) - 1, rel=1e-12)

    def test_geometric_is_default(self):
        assert per_period_rf(0.05) == per_period_rf(0.05, "geometric", 12)

    def test_zero_rate(self):
        assert per_period_rf(0.0) == 0.0

    def test_unknown_mode(self):
        with pytest.raises(ValidationError):
            per_period_rf(0.03, "continuous")


class TestRiskAversionSeries:
    """RRA from the relative-CE formula, ARA = RRA / wealth."""

    def test_worked_example(self):
        points = risk_aversion_series(_single_entry(0.008, 0.04), _records(1), compounding="simple")
        assert len(points) == 1
        p = points[0]
        assert p.wealth == 30.0
        assert p.rra == pytest.approx(7.2115, abs=1e-4)
        assert p.ara == pytest.approx(0.24038, abs=1e-5)

    def test_ara_is_rra_over_wealth(self):
        p = risk_aversion_series(_single_entry(0.008, 0.04), _records(1, cap=12.5))[0]
        assert p.ara == p.rra / p.wealth

    def test_doubling_cap_halves_ara(self):
        small = risk_aversion_series(_single_entry(0.008, 0.04), _records(1, cap=20.0))[0]
        large = risk_aversion_series(_single_entry(0.008, 0.04), _records(1, cap=40.0))[0]
        assert large.rra == small.rra
        assert large.ara == pytest.approx(small.ara / 2)

    def test_degenerate_moments(self):
        with pytest.raises(DegenerateError):
            risk_aversion_series(_single_entry(0.0, 0.0), _records(1))

    def test_missing_market_record(self):
        series = _single_entry(0.008, 0.04, date=YearMonth(1999, 12))
        with pytest.raises(AlignmentError):
            risk_aversion_series(series, _records(3))

    def test_negative_rra_kept(self):
        # per-period rf far above the mean return
        p = risk_aversion_series(_single_entry(0.001, 0.04), _records(1, rf=0.5))[0]
        assert p.rra < 0
        assert p.ara < 0

    def test_log_agent_market_recovers_unit_rra(self, log_market):
        series = estimate_moments(log_market.returns(), Scheme("expanding", 24))
        points = risk_aversion_series(series, log_market.records)
        assert len(points) == 360 - 24 + 1
        assert max(abs(p.rra - 1.0) for p in points) < 0.1


class TestRestrictDates:
    """Inclusive [start, end] filter."""

    def test_both_bounds(self):
        items = [RiskAversionPoint(d, 1.0, 1.0, 1.0) for d in month_range(YearMonth(2000, 1), 12)]
        kept = restrict_dates(items, YearMonth(2000, 3), YearMonth(2000, 5))
        assert [str(p.date) for p in kept] == ["2000-03", "2000-04", "2000-05"]

    def test_open_bounds(self):
        items = [RiskAversionPoint(d, 1.0, 1.0, 1.0) for d in month_range(YearMonth(2000, 1), 4)]
        assert restrict_dates(items) == items
        assert len(restrict_dates(items, start=YearMonth(2000, 3))) == 2
        assert len(restrict_dates(items, end=YearMonth(2000, 1))) == 1


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

class TestPearsonCorrelation:
    """Sample correlation with degenerate-input errors."""

    def test_perfect_positive(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert pearson_correlation(x, [2 * v + 1 for v in x]) == pytest.approx(1.0)

    def test_perfect_negative(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert pearson_correlation(x, [-v for v in x]) == pytest.approx(-1.0)

    def test_three_points(self):
        assert pearson_correlation([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)

    def test_bounded(self):
        x = list(np.linspace(0.1, 1.0, 50))
        corr = pearson_correlation(x, [3 * v for v in x])
        assert -1.0 <= corr <= 1.0

    def test_constant_series(self):
        with pytest.raises(DegenerateError):
            pearson_correlation([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])

    def test_single_point(self):
        with pytest.raises(InsufficientData):
            pearson_correlation([1.0], [2.0])

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            pearson_correlation([1.0, 2.0], [1.0, 2.0, 3.0])


class TestClassifyTrend:
    """Dead-band labelling of the correlation."""

    def test_increasing(self):
        res = classify_trend([1, 2, 3, 4], [1, 4, 9, 16])
        assert res.label == Trend.INCREASING
        assert res.tau == 0.2

    def test_decreasing(self):
        assert classify_trend([1, 2, 3, 4], [4, 3, 2, 1]).label == Trend.DECREASING

    def test_constant_with_noise(self):
        rng = np.random.default_rng(0)
        wealth = np.linspace(10, 40, 400)
        measure = 1.0 + rng.normal(0.0, 1e-6, 400)
        res = classify_trend(wealth, measure)
        assert abs(res.corr) < 0.2
        assert res.label == Trend.CONSTANT

    def test_wide_band_swallows_strong_correlation(self):
        assert classify_trend([1, 2, 3], [1, 3, 2], tau=0.6).label == Trend.CONSTANT

    def test_zero_band(self):
        assert classify_trend([1, 2, 3], [1, 3, 2], tau=0.0).label == Trend.INCREASING

    @pytest.mark.parametrize("tau", [-0.1, 1.0, 1.5])
    def test_tau_out_of_range(self, tau):
        with pytest.raises(ValidationError):
            classify_trend([1, 2, 3], [1, 3, 2], tau=tau)

    def test_log_agent_market_is_constant(self, log_market):
        series = estimate_moments(log_market.returns(), Scheme("expanding", 24))
        points = risk_aversion_series(series, log_market.records)
        res = classify_trend([p.wealth for p in points], [p.rra for p in points])
        assert res.label == Trend.CONSTANT


class TestSplit:
    """Correlation below and above a wealth cut."""

    def test_monotone_measure(self):
        w = list(range(1, 11))
        below, above = split_rra_at(5.5, w, [2 * v for v in w])
        assert below == pytest.approx(1.0)
        assert above == pytest.approx(1.0)

    def test_rise_then_fall(self):
        w = list(range(1, 11))
        m = [v if v <= 5 else 10 - v for v in w]
        below, above = split_rra_at(5, w, m)
        assert below > 0
        assert above < 0

    def test_cut_leaves_one_side_short(self):
        with pytest.raises(InsufficientData):
            split_rra_at(9.5, list(range(1, 11)), list(range(1, 11)))

    def test_cut_is_inclusive_below(self):
        w = [1.0, 2.0, 3.0, 4.0]
        below, above = split_rra_at(2.0, w, [1.0, 2.0, 4.0, 3.0])
        assert below == pytest.approx(1.0)
        assert above == pytest.approx(-1.0)


class TestDiagnose:
    """Diagnostics rows and negative-value accounting."""

    @staticmethod
    def _points(wealth, rra):
        return [
            RiskAversionPoint(d, w, r / w, r)
            for d, w, r in zip(month_range(YearMonth(2000, 1), len(wealth)), wealth, rra)
        ]

    def test_rows_without_split(self):
        report = diagnose(self._points([10, 20, 30, 40], [1.0, 1.5, 1.2, 2.0]))
        assert [r.series for r in report.rows] == ["ara_vs_wealth", "rra_vs_wealth"]
        assert report.negative_ara == 0
        assert report.negative_rra == 0

    def test_rows_with_split(self):
        report = diagnose(self._points([10, 20, 30, 40, 50], [1.0, 2.0, 3.0, 2.0, 1.0]), split_at=30)
        names = [r.series for r in report.rows]
        assert names == ["ara_vs_wealth", "rra_vs_wealth", "rra_vs_wealth_below", "rra_vs_wealth_above"]
        below, above = report.rows[2], report.rows[3]
        assert below.label == Trend.INCREASING
        assert above.label == Trend.DECREASING

    def test_negative_rra_counted_and_logged(self, caplog):
        points = self._points([10, 20, 30, 40], [1.0, -0.5, 1.2, -2.0])
        with caplog.at_level(logging.WARNING, logger="src.core.estimation"):
            report = diagnose(points)
        assert report.negative_rra == 2
        assert report.negative_ara == 2
        assert "negative RRA" in caplog.text
        assert "2000-02" in caplog.text

    def test_tau_carried_into_rows(self):
        report = diagnose(self._points([10, 20, 30], [1.0, 3.0, 2.0]), tau=0.05)
        assert all(r.tau == 0.05 for r in report.rows)

    def test_regime_break_fixture(self, break_market):
        series = estimate_moments(break_market.returns(), Scheme("expanding", 24))
        points = risk_aversion_series(series, break_market.records)
        report = diagnose(points, split_at=27.0)
        rows = {r.series: r for r in report.rows}
        assert rows["rra_vs_wealth_below"].corr >= 0.85
        assert rows["rra_vs_wealth"].corr < 0
        assert rows["rra_vs_wealth"].label == Trend.DECREASING
