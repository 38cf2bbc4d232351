"""
Risk Attitude - Market Risk-Aversion Estimation

Turns a monthly market series (return, market cap, risk-free yield) into
ARA/RRA series:

  1. moment estimation, expanding (all data up to t) or rolling (last M periods),
     sample standard deviation with the (n-1) denominator
  2. per period: z~ = 1 + per-period risk-free rate, RRA from the relative-CE
     formula, ARA = RRA / market cap
  3. diagnostics: Pearson correlation of each measure against wealth, a
     dead-band trend label, and an optional split of the RRA correlation
     at a wealth cut

Dates are strictly increasing year-months. Alignment between moment dates
and market records is a strict inner join: a missing period is an error.

All functions are pure; identical inputs give bit-identical outputs.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .errors import AlignmentError, DegenerateError, InsufficientData, ParseError, ValidationError
from .lottery import rra_from_relative_ce
from .utility import Trend

logger = logging.getLogger(__name__)

DEFAULT_MIN_OBS = 24            # two years of monthly data
DEFAULT_TAU = 0.2               # dead-band around zero correlation
DEFAULT_PERIODS_PER_YEAR = 12
ROLLING_WINDOWS = (60, 120, 180)  # 5, 10 and 15 years of months

COMPOUNDING_MODES = ("geometric", "simple")


class YearMonth(NamedTuple):
    year: int
    month: int

    @classmethod
    def parse(cls, text: str) -> "YearMonth":
        raw = text.strip()
        parts = raw.split("-")
        if len(parts) != 2 or len(parts[0]) != 4 or len(parts[1]) != 2:
            raise ParseError(f"date '{raw}' is not YYYY-MM")
        try:
            year, month = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"date '{raw}' is not YYYY-MM") from None
        if not 1 <= month <= 12:
            raise ParseError(f"month out of range in '{raw}'")
        return cls(year, month)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


@dataclass(frozen=True)
class MarketRecord:
    """One period of market data. market_cap is in file units (e.g. trillions)."""
    date: YearMonth
    ret: float
    market_cap: float
    rf_annual: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.ret) and self.ret > -1):
            raise ValidationError(f"{self.date}: return {self.ret!r} must be > -1")
        if not (math.isfinite(self.market_cap) and self.market_cap > 0):
            raise ValidationError(f"{self.date}: market cap {self.market_cap!r} must be > 0")
        if not (math.isfinite(self.rf_annual) and self.rf_annual > -1):
            raise ValidationError(f"{self.date}: risk-free yield {self.rf_annual!r} must be > -1")


@dataclass(frozen=True)
class Scheme:
    """``expanding:<min_obs>`` or ``rolling:<M>``."""
    kind: str
    size: int

    def __post_init__(self) -> None:
        if self.kind not in ("expanding", "rolling"):
            raise ValidationError(f"unknown estimation scheme '{self.kind}'")
        if self.size < 2:
            raise ValidationError(f"{self.kind} scheme needs a size >= 2, got {self.size}")

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        kind, sep, raw = text.strip().partition(":")
        kind = kind.strip().lower()
        if not sep:
            if kind == "expanding":
                return cls("expanding", DEFAULT_MIN_OBS)
            raise ParseError(f"scheme '{text}' must look like expanding:<min_obs> or rolling:<M>")
        try:
            size = int(raw)
        except ValueError:
            raise ParseError(f"scheme size '{raw}' is not an integer") from None
        return cls(kind, size)

    def __str__(self) -> str:
        return f"{self.kind}:{self.size}"


class MomentEntry(NamedTuple):
    date: YearMonth
    mu: float
    sigma: float


@dataclass(frozen=True)
class MomentSeries:
    entries: Tuple[MomentEntry, ...]
    scheme: Scheme


class RiskAversionPoint(NamedTuple):
    date: YearMonth
    wealth: float
    ara: float
    rra: float


class TrendResult(NamedTuple):
    label: Trend
    corr: float
    tau: float


class DiagnosticRow(NamedTuple):
    series: str
    corr: float
    label: Trend
    tau: float


@dataclass
class Diagnostics:
    rows: List[DiagnosticRow] = field(default_factory=list)
    negative_ara: int = 0
    negative_rra: int = 0


Dated = TypeVar("Dated")


# ---------------------------------------------------------------------------
# Moment estimation
# ---------------------------------------------------------------------------


def _split_dated(returns: Sequence[Tuple[YearMonth, float]]) -> Tuple[List[YearMonth], np.ndarray]:
    dates = [d for d, _ in returns]
    for prev, cur in zip(dates, dates[1:]):
        if not cur > prev:
            raise ValidationError(f"dates must be strictly increasing ({prev} then {cur})")
    values = np.ascontiguousarray([float(v) for _, v in returns], dtype=float)
    return dates, values


def _window_moments(window: np.ndarray) -> Tuple[float, float]:
    return float(np.mean(window)), float(np.std(window, ddof=1))


def expanding_moments(
    returns: Sequence[Tuple[YearMonth, float]],
    min_obs: int = DEFAULT_MIN_OBS,
) -> MomentSeries:
    """Recursive estimation: the entry at t uses every observation up to t."""
    scheme = Scheme("expanding", min_obs)
    dates, values = _split_dated(returns)
    if len(values) < min_obs:
        raise InsufficientData(f"expanding estimation needs {min_obs} observations, have {len(values)}")
    entries = tuple(
        MomentEntry(dates[end - 1], *_window_moments(values[:end]))
        for end in range(min_obs, len(values) + 1)
    )
    return MomentSeries(entries, scheme)


def rolling_moments(returns: Sequence[Tuple[YearMonth, float]], window: int) -> MomentSeries:
    """Rolling estimation: the entry at t uses observations t-M+1..t."""
    scheme = Scheme("rolling", window)
    dates, values = _split_dated(returns)
    if len(values) < window:
        raise InsufficientData(f"rolling window of {window} needs at least {window} observations, have {len(values)}")
    entries = tuple(
        MomentEntry(dates[end - 1], *_window_moments(values[end - window:end]))
        for end in range(window, len(values) + 1)
    )
    return MomentSeries(entries, scheme)


def estimate_moments(returns: Sequence[Tuple[YearMonth, float]], scheme: Scheme) -> MomentSeries:
    if scheme.kind == "expanding":
        return expanding_moments(returns, scheme.size)
    return rolling_moments(returns, scheme.size)


# ---------------------------------------------------------------------------
# Risk-aversion extraction
# ---------------------------------------------------------------------------


def per_period_rf(
    rf_annual: float,
    compounding: str = "geometric",
    periods_per_year: int = DEFAULT_PERIODS_PER_YEAR,
) -> float:
    """Convert an annualized yield to a per-period rate."""
    if compounding == "geometric":
        return math.expm1(math.log1p(rf_annual) / periods_per_year)
    if compounding == "simple":
        return rf_annual / periods_per_year
    raise ValidationError(f"rf compounding must be one of {COMPOUNDING_MODES}, got '{compounding}'")


def risk_aversion_series(
    moment_series: MomentSeries,
    market: Iterable[MarketRecord],
    compounding: str = "geometric",
    periods_per_year: int = DEFAULT_PERIODS_PER_YEAR,
) -> List[RiskAversionPoint]:
    by_date: Dict[YearMonth, MarketRecord] = {rec.date: rec for rec in market}
    points: List[RiskAversionPoint] = []
    for entry in moment_series.entries:
        rec = by_date.get(entry.date)
        if rec is None:
            raise AlignmentError(f"no market record for {entry.date}")
        z_tilde = 1.0 + per_period_rf(rec.rf_annual, compounding, periods_per_year)
        try:
            lam = rra_from_relative_ce(entry.mu, entry.sigma, z_tilde)
        except DegenerateError as e:
            raise DegenerateError(f"{entry.date}: {e}") from None
        points.append(RiskAversionPoint(entry.date, rec.market_cap, lam / rec.market_cap, lam))
    return points


def restrict_dates(
    items: Sequence[Dated],
    start: Optional[YearMonth] = None,
    end: Optional[YearMonth] = None,
) -> List[Dated]:
    """Keep items whose ``date`` lies in [start, end]; None leaves a side open."""
    return [
        it for it in items
        if (start is None or it.date >= start) and (end is None or it.date <= end)
    ]


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def pearson_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape:
        raise ValidationError(f"series lengths differ ({len(xa)} vs {len(ya)})")
    if len(xa) < 2:
        raise InsufficientData(f"correlation needs at least 2 points, have {len(xa)}")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise DegenerateError("correlation is undefined for a constant series")
    corr = float(np.corrcoef(xa, ya)[0, 1])
    return max(-1.0, min(1.0, corr))


def _check_tau(tau: float) -> None:
    if not 0 <= tau < 1:
        raise ValidationError(f"tau must lie in [0, 1), got {tau!r}")


def classify_trend(wealth: Sequence[float], measure: Sequence[float], tau: float = DEFAULT_TAU) -> TrendResult:
    _check_tau(tau)
    corr = pearson_correlation(wealth, measure)
    return TrendResult(_label(corr, tau), corr, tau)


def split_rra_at(
    wealth_cut: float,
    wealth: Sequence[float],
    measure: Sequence[float],
) -> Tuple[float, float]:
    """Correlation on points with wealth <= cut and on points with wealth > cut."""
    w = np.asarray(wealth, dtype=float)
    m = np.asarray(measure, dtype=float)
    below = w <= wealth_cut
    above = ~below
    for name, mask in (("below", below), ("above", above)):
        if int(mask.sum()) < 2:
            raise InsufficientData(f"split at {wealth_cut!r} leaves {int(mask.sum())} point(s) {name} the cut")
    return pearson_correlation(w[below], m[below]), pearson_correlation(w[above], m[above])


def diagnose(
    points: Sequence[RiskAversionPoint],
    tau: float = DEFAULT_TAU,
    split_at: Optional[float] = None,
) -> Diagnostics:
    """Trend rows for ARA and RRA against wealth, plus the optional split."""
    wealth = [p.wealth for p in points]
    ara_vals = [p.ara for p in points]
    rra_vals = [p.rra for p in points]

    report = Diagnostics()
    for name, values in (("ara_vs_wealth", ara_vals), ("rra_vs_wealth", rra_vals)):
        res = classify_trend(wealth, values, tau)
        report.rows.append(DiagnosticRow(name, res.corr, res.label, tau))

    if split_at is not None:
        below, above = split_rra_at(split_at, wealth, rra_vals)
        for name, corr in (("rra_vs_wealth_below", below), ("rra_vs_wealth_above", above)):
            report.rows.append(DiagnosticRow(name, corr, _label(corr, tau), tau))

    report.negative_ara = sum(1 for v in ara_vals if v < 0)
    report.negative_rra = sum(1 for v in rra_vals if v < 0)
    if report.negative_rra:
        first = next(p.date for p in points if p.rra < 0)
        logger.warning(
            "%d period(s) with negative RRA (first at %s): risk-free CE above 1 + mean return",
            report.negative_rra, first,
        )
    return report


def _label(corr: float, tau: float) -> Trend:
    if corr < -tau:
        return Trend.DECREASING
    if corr > tau:
        return Trend.INCREASING
    return Trend.CONSTANT
