"""
Risk Attitude - Two-Asset Portfolio Weights

An investor with normalized wealth w0 = 1 splits it between a risky asset
with per-period return R and a risk-free rate rf. Final wealth is

    W1 = (1 + rf) + w_s (R - rf)

w_s is the fraction in the risky asset; it may exceed 1 (borrowing) or be
negative (short selling). No constraint is imposed here.

Closed forms come from the second-order Taylor expansion of E[U'(W1)(R - rf)]
around 1 + rf, with D = mu^2 + sigma^2 - 2 mu rf + rf^2:

    general     w_s = (mu - rf) / (ara(1 + rf) D)
    quadratic   w_s = [(mu - rf) - 2b(1 + rf)(mu - rf)] / (2b D)
    log         w_s = (1 + rf)(mu - rf) / D
    sqrt        w_s = 2 w_log
    exp (c=2)   w_s = w_log / (2(1 + rf))

weight_numeric is the independent oracle: it solves the exact first-order
condition sum_i p_i U'(W1_i)(r_i - rf) = 0 with a bracketed root finder.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Mapping, NamedTuple, Optional, Sequence, Tuple

from scipy import optimize

from .errors import AlignmentError, DegenerateError, DomainError, NoInteriorOptimum, ValidationError
from .estimation import MomentSeries, YearMonth
from .lottery import DiscreteLottery
from .utility import Family, UtilitySpec, ara, evaluate, valid_domain

logger = logging.getLogger(__name__)

DEFAULT_SEARCH_BRACKET = (-20.0, 20.0)

# The feasible bracket is pulled in by this fraction of its width so the
# first-order condition is never evaluated on a domain edge
_BRACKET_INSET = 1e-9

_ROOT_XTOL = 1e-13
_ROOT_MAXITER = 200


@dataclass(frozen=True)
class MarketParams:
    """Per-period moments of the risky asset and the per-period risk-free rate."""
    mu: float
    sigma: float
    rf: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma) and math.isfinite(self.rf)):
            raise ValidationError(f"market parameters must be finite: {self}")
        if self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma!r}")
        if not self.rf > -1:
            raise ValidationError(f"risk-free rate must be > -1, got {self.rf!r}")

    @property
    def excess(self) -> float:
        return self.mu - self.rf

    def denominator(self) -> float:
        d = self.mu * self.mu + self.sigma * self.sigma - 2.0 * self.mu * self.rf + self.rf * self.rf
        if not d > 0:
            raise DegenerateError(
                f"risky asset is riskless at the risk-free rate (mu={self.mu!r}, sigma={self.sigma!r}, rf={self.rf!r})"
            )
        return d


@dataclass(frozen=True)
class WeightResult:
    w_s: float
    family: UtilitySpec

    def __post_init__(self) -> None:
        if not math.isfinite(self.w_s):
            raise DegenerateError(f"non-finite weight {self.w_s!r} for {self.family}")


class DatedWeight(NamedTuple):
    date: YearMonth
    w_s: float
    family: UtilitySpec


class RatioSummary(NamedTuple):
    mean: float
    min: float
    max: float
    count: int


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def weight_quadratic(b: float, p: MarketParams) -> WeightResult:
    family = UtilitySpec.quadratic(b)
    d = p.denominator()
    excess = p.excess
    w_s = (excess - 2.0 * b * (1.0 + p.rf) * excess) / (2.0 * b * d)
    return WeightResult(w_s, family)


def weight_log(p: MarketParams) -> WeightResult:
    d = p.denominator()
    return WeightResult((1.0 + p.rf) * p.excess / d, UtilitySpec.log())


def weight_sqrt(p: MarketParams) -> WeightResult:
    return WeightResult(2.0 * weight_log(p).w_s, UtilitySpec.sqrt())


def weight_exponential(p: MarketParams) -> WeightResult:
    """Exponential utility with c = 2 (any shift a gives the same weight)."""
    return WeightResult(weight_log(p).w_s / (2.0 * (1.0 + p.rf)), UtilitySpec.exponential())


def weight_taylor(u: UtilitySpec, p: MarketParams) -> WeightResult:
    """Second-order weight for any family; ara is taken at 1 + rf."""
    d = p.denominator()
    r = ara(u, 1.0 + p.rf)
    return WeightResult(p.excess / (r * d), u)


def closed_form_weight(u: UtilitySpec, p: MarketParams) -> WeightResult:
    if u.family == Family.QUADRATIC:
        return weight_quadratic(u.b, p)
    if u.family == Family.LOG and u.a == 0:
        return weight_log(p)
    if u.family == Family.SQRT:
        return weight_sqrt(p)
    if u.family == Family.EXPONENTIAL and u.c == 2.0:
        return WeightResult(weight_exponential(p).w_s, u)
    return weight_taylor(u, p)


# ---------------------------------------------------------------------------
# Numeric oracle
# ---------------------------------------------------------------------------


def _feasible_bracket(
    u: UtilitySpec,
    diffs: Sequence[float],
    rf: float,
    bracket: Tuple[float, float],
) -> Tuple[float, float]:
    """Interval of w_s keeping every final wealth inside u's domain, within bracket."""
    dlo, dhi = valid_domain(u)
    base = 1.0 + rf
    lo, hi = float(bracket[0]), float(bracket[1])
    for d in diffs:
        if d > 0:
            lo = max(lo, (dlo - base) / d)
            hi = min(hi, (dhi - base) / d)
        elif d < 0:
            lo = max(lo, (dhi - base) / d)
            hi = min(hi, (dlo - base) / d)
        elif not dlo < base < dhi:
            raise DomainError(f"riskless wealth {base!r} outside the domain of {u}")
    if not lo < hi:
        raise DomainError(f"no feasible weight in [{bracket[0]}, {bracket[1]}] for {u}")
    inset = _BRACKET_INSET * (hi - lo)
    return lo + inset, hi - inset


def weight_numeric(
    u: UtilitySpec,
    ret_lottery: DiscreteLottery,
    rf: float,
    bracket: Tuple[float, float] = DEFAULT_SEARCH_BRACKET,
) -> WeightResult:
    """Maximize E[U((1 + rf) + w_s (R - rf))] over the feasible part of bracket."""
    if not rf > -1:
        raise ValidationError(f"risk-free rate must be > -1, got {rf!r}")
    diffs = [r - rf for r in ret_lottery.outcomes]
    probs = ret_lottery.probabilities
    if all(d == 0 for p_i, d in zip(probs, diffs) if p_i > 0):
        raise DegenerateError("every outcome equals the risk-free rate; any weight is optimal")

    lo, hi = _feasible_bracket(u, diffs, rf, bracket)
    base = 1.0 + rf

    def foc(w: float) -> float:
        return math.fsum(
            p_i * evaluate(u, base + w * d).first_derivative * d
            for p_i, d in zip(probs, diffs)
        )

    f_lo, f_hi = foc(lo), foc(hi)
    if f_lo == 0:
        return WeightResult(lo, u)
    if f_hi == 0:
        return WeightResult(hi, u)
    if (f_lo > 0) == (f_hi > 0):
        side = "upper" if f_lo > 0 else "lower"
        raise NoInteriorOptimum(
            f"expected utility of {u} is monotone on [{lo:.6g}, {hi:.6g}]; optimum at the {side} bound"
        )
    root = optimize.brentq(foc, lo, hi, xtol=_ROOT_XTOL, maxiter=_ROOT_MAXITER)
    logger.debug("numeric weight for %s: %.12g on [%.6g, %.6g]", u, root, lo, hi)
    return WeightResult(float(root), u)


# ---------------------------------------------------------------------------
# Series and comparisons
# ---------------------------------------------------------------------------


def weight_series(
    u: UtilitySpec,
    moment_series: MomentSeries,
    rf_series: Mapping[YearMonth, float],
) -> List[DatedWeight]:
    """Closed-form weight per moment entry; rf_series holds per-period rates."""
    out: List[DatedWeight] = []
    for entry in moment_series.entries:
        rf = rf_series.get(entry.date)
        if rf is None:
            raise AlignmentError(f"no risk-free rate for {entry.date}")
        try:
            res = closed_form_weight(u, MarketParams(entry.mu, entry.sigma, rf))
        except DegenerateError as e:
            raise DegenerateError(f"{entry.date}: {e}") from None
        out.append(DatedWeight(entry.date, res.w_s, u))
    return out


def clamp_weight(w_s: float, bounds: Optional[Tuple[float, float]]) -> float:
    if bounds is None:
        return w_s
    return min(max(w_s, bounds[0]), bounds[1])


def weight_ratio_summary(series_a: Sequence[DatedWeight], series_b: Sequence[DatedWeight]) -> RatioSummary:
    """Pointwise a/b over matching dates. Dates where b is zero are skipped."""
    if [w.date for w in series_a] != [w.date for w in series_b]:
        raise AlignmentError("weight series cover different dates")
    ratios = [a.w_s / b.w_s for a, b in zip(series_a, series_b) if b.w_s != 0]
    if not ratios:
        raise DegenerateError("no date with a nonzero reference weight")
    return RatioSummary(math.fsum(ratios) / len(ratios), min(ratios), max(ratios), len(ratios))
