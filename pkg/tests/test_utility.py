"""Tests for the parametric utility families: derivatives, ARA/RRA, inversion."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import ConvergenceError, DomainError, ParseError, RangeError
from src.core.utility import (
    Family,
    Trend,
    UtilitySpec,
    ara,
    ara_trend,
    evaluate,
    format_utility,
    in_domain,
    invert,
    parse_utility,
    rra,
    rra_trend,
    utility_range,
    valid_domain,
)

LOG = UtilitySpec.log()
SQRT = UtilitySpec.sqrt()
QUAD = UtilitySpec.quadratic(0.2)
EXP = UtilitySpec.exponential(0.0, 2.0)
POWER = UtilitySpec.power(1.0, 0.5)
NEGPOWER = UtilitySpec.negpower(1.0, 2.0)

ALL_FAMILIES = [LOG, SQRT, QUAD, EXP, POWER, NEGPOWER, UtilitySpec.log(3.0)]

# Wealth ranges inside each family's domain where the float arithmetic is well behaved
SAMPLE_RANGES = {
    "log:a=0.0": (0.01, 1e4),
    "log:a=3.0": (-2.9, 1e4),
    "sqrt": (0.01, 1e4),
    "quadratic:b=0.2": (-10.0, 2.4),
    "exp:a=0.0,c=2.0": (-5.0, 5.0),
    "power:a=1.0,c=0.5": (-0.9, 1e4),
    "negpower:a=1.0,c=2.0": (-0.9, 50.0),
}


def _wealth_in(u, fraction):
    lo, hi = SAMPLE_RANGES[format_utility(u)]
    return lo + (hi - lo) * fraction


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

class TestUtilitySpec:
    """Parameter invariants enforced at construction."""

    @pytest.mark.parametrize("kwargs", [
        dict(family=Family.QUADRATIC, b=0.0),
        dict(family=Family.QUADRATIC, b=-0.1),
        dict(family=Family.LOG, a=-1.0),
        dict(family=Family.POWER, a=0.0, c=0.5),
        dict(family=Family.POWER, a=1.0, c=1.0),
        dict(family=Family.POWER, a=1.0, c=0.0),
        dict(family=Family.NEGPOWER, a=1.0, c=0.0),
        dict(family=Family.NEGPOWER, a=0.0, c=2.0),
        dict(family=Family.EXPONENTIAL, a=-1.0, c=2.0),
        dict(family=Family.EXPONENTIAL, a=0.0, c=0.0),
    ])
    def test_invalid_parameters_rejected(self, kwargs):
        with pytest.raises(DomainError):
            UtilitySpec(**kwargs)

    def test_frozen(self):
        with pytest.raises(AttributeError):
            LOG.a = 1.0

    def test_sqrt_domain_is_positive_wealth(self):
        assert valid_domain(SQRT) == (0.0, math.inf)

    def test_quadratic_domain_upper_bound(self):
        lo, hi = valid_domain(QUAD)
        assert lo == -math.inf
        assert hi == pytest.approx(2.5)
        assert not in_domain(QUAD, 2.5)
        assert in_domain(QUAD, 2.49)

    def test_in_domain_rejects_nan(self):
        assert not in_domain(LOG, float("nan"))


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

class TestEvaluate:
    """Closed-form value and derivatives."""

    def test_log_at_one(self):
        assert evaluate(LOG, 1.0) == (0.0, 1.0, -1.0)

    def test_quadratic_at_one(self):
        value, d1, d2 = evaluate(QUAD, 1.0)
        assert value == pytest.approx(0.8)
        assert d1 == pytest.approx(0.6)
        assert d2 == pytest.approx(-0.4)

    def test_exponential_at_zero(self):
        assert evaluate(EXP, 0.0) == (-1.0, 2.0, -4.0)

    def test_sqrt_at_four(self):
        value, d1, d2 = evaluate(SQRT, 4.0)
        assert value == pytest.approx(2.0)
        assert d1 == pytest.approx(0.25)
        assert d2 == pytest.approx(-1.0 / 32.0)

    def test_quadratic_outside_domain(self):
        with pytest.raises(DomainError):
            evaluate(QUAD, 2.5)

    def test_log_at_zero_outside_domain(self):
        with pytest.raises(DomainError):
            evaluate(LOG, 0.0)

    @pytest.mark.parametrize("u", ALL_FAMILIES, ids=format_utility)
    @settings(max_examples=60, deadline=None)
    @given(fraction=st.floats(min_value=0.0, max_value=1.0))
    def test_increasing_and_concave(self, u, fraction):
        w = _wealth_in(u, fraction)
        _, d1, d2 = evaluate(u, w)
        assert d1 > 0
        assert d2 < 0


# ---------------------------------------------------------------------------
# ARA / RRA
# ---------------------------------------------------------------------------

class TestRiskMeasures:
    """Pointwise absolute and relative risk aversion."""

    def test_log_ara(self):
        assert ara(LOG, 1000.0) == pytest.approx(0.001)

    @pytest.mark.parametrize("w", [-100.0, 0.0, 3.5, 1e6])
    def test_exponential_ara_constant(self, w):
        assert ara(EXP, w) == 2.0

    def test_quadratic_ara(self):
        assert ara(QUAD, 1.0) == pytest.approx(0.4 / 0.6)

    @pytest.mark.parametrize("w", [0.5, 1.0, 1234.5])
    def test_log_rra_is_one(self, w):
        assert rra(LOG, w) == pytest.approx(1.0)

    @pytest.mark.parametrize("w", [0.5, 7.0, 1e5])
    def test_sqrt_rra_is_half(self, w):
        assert rra(SQRT, w) == pytest.approx(0.5)

    def test_power_rra(self):
        assert rra(POWER, 3.0) == pytest.approx(0.375)

    def test_rra_requires_positive_wealth(self):
        with pytest.raises(DomainError):
            rra(UtilitySpec.log(3.0), -1.0)

    def test_ara_outside_domain(self):
        with pytest.raises(DomainError):
            ara(QUAD, 3.0)

    @pytest.mark.parametrize("u", ALL_FAMILIES, ids=format_utility)
    @settings(max_examples=40, deadline=None)
    @given(fraction=st.floats(min_value=0.01, max_value=1.0))
    def test_rra_is_wealth_times_ara(self, u, fraction):
        w = _wealth_in(u, fraction)
        if w <= 0:
            return
        assert rra(u, w) == w * ara(u, w)

    @pytest.mark.parametrize("u", ALL_FAMILIES, ids=format_utility)
    @pytest.mark.parametrize("alpha,beta", [(3.0, -7.0), (0.25, 100.0)])
    def test_positive_affine_invariance(self, u, alpha, beta):
        w = _wealth_in(u, 0.3)
        _, d1, d2 = evaluate(u, w)
        # alpha*U + beta has derivatives alpha*U', alpha*U''
        transformed = -(alpha * d2) / (alpha * d1)
        assert transformed == pytest.approx(ara(u, w), rel=1e-12)

    @pytest.mark.parametrize("u", ALL_FAMILIES, ids=format_utility)
    def test_ara_is_minus_curvature_ratio(self, u):
        w = _wealth_in(u, 0.1)
        _, d1, d2 = evaluate(u, w)
        assert ara(u, w) == pytest.approx(-d2 / d1, rel=1e-12)


class TestTrends:
    """Analytic monotonicity of ARA and RRA in wealth."""

    def test_log_ara_decreasing(self):
        values = [ara(LOG, w) for w in (1.0, 2.0, 10.0, 100.0)]
        assert values == sorted(values, reverse=True)
        assert len(set(values)) == len(values)
        assert ara_trend(LOG) == Trend.DECREASING

    def test_exponential_ara_constant(self):
        assert ara_trend(EXP) == Trend.CONSTANT

    def test_quadratic_ara_increasing(self):
        values = [ara(QUAD, w) for w in (-5.0, 0.0, 1.0, 2.0, 2.4)]
        assert values == sorted(values)
        assert len(set(values)) == len(values)
        assert ara_trend(QUAD) == Trend.INCREASING

    def test_rra_trends(self):
        assert rra_trend(LOG) == Trend.CONSTANT
        assert rra_trend(SQRT) == Trend.CONSTANT
        assert rra_trend(EXP) == Trend.INCREASING
        assert rra_trend(QUAD) == Trend.INCREASING
        assert rra_trend(UtilitySpec.log(3.0)) == Trend.INCREASING

    def test_trend_values_match_labels(self):
        assert Trend.DECREASING.value == "Decreasing"
        assert Trend.CONSTANT.value == "Constant"
        assert Trend.INCREASING.value == "Increasing"


# ---------------------------------------------------------------------------
# invert
# ---------------------------------------------------------------------------

class TestInvert:
    """Monotone inversion by bracketed bisection."""

    def test_log_zero(self):
        assert invert(LOG, 0.0) == pytest.approx(1.0, rel=1e-12)

    def test_sqrt_three(self):
        assert invert(SQRT, 3.0) == pytest.approx(9.0, rel=1e-12)

    def test_quadratic_increasing_branch(self):
        # W - 0.2 W^2 = 0.8 has roots 1 and 4; only 1 lies below 1/(2b) = 2.5
        assert invert(QUAD, 0.8) == pytest.approx(1.0, rel=1e-10)

    def test_quadratic_above_max_is_range_error(self):
        # max of W - 0.2 W^2 is 1.25 at W = 2.5
        with pytest.raises(RangeError):
            invert(QUAD, 1.3)

    def test_sqrt_negative_target_is_range_error(self):
        with pytest.raises(RangeError):
            invert(SQRT, -1.0)

    def test_exponential_positive_target_is_range_error(self):
        with pytest.raises(RangeError):
            invert(EXP, 0.5)

    def test_nan_target_is_range_error(self):
        with pytest.raises(RangeError):
            invert(LOG, float("nan"))

    def test_range_bounds(self):
        assert utility_range(QUAD) == (-math.inf, pytest.approx(1.25))
        assert utility_range(SQRT) == (0.0, math.inf)
        assert utility_range(NEGPOWER) == (-math.inf, 0.0)

    def test_convergence_error_is_exit_code_two(self):
        assert ConvergenceError.exit_code == 2

    @pytest.mark.parametrize("u", ALL_FAMILIES, ids=format_utility)
    @settings(max_examples=60, deadline=None)
    @given(fraction=st.floats(min_value=0.0, max_value=1.0))
    def test_round_trip(self, u, fraction):
        w = _wealth_in(u, fraction)
        recovered = invert(u, evaluate(u, w).value)
        assert recovered == pytest.approx(w, rel=1e-10, abs=1e-10)


# ---------------------------------------------------------------------------
# Text form
# ---------------------------------------------------------------------------

class TestTextForm:
    """Canonical ``family:key=value`` form used on the command line."""

    @pytest.mark.parametrize("text,expected", [
        ("quadratic:b=0.2", UtilitySpec.quadratic(0.2)),
        ("log:a=0", UtilitySpec.log(0.0)),
        ("log", UtilitySpec.log(0.0)),
        ("power:a=1,c=0.5", UtilitySpec.power(1.0, 0.5)),
        ("negpower:a=1,c=2", UtilitySpec.negpower(1.0, 2.0)),
        ("sqrt", UtilitySpec.sqrt()),
        ("exp:a=0,c=2", UtilitySpec.exponential(0.0, 2.0)),
        ("exp", UtilitySpec.exponential(0.0, 2.0)),
        (" Quadratic : b = 0.2 ", UtilitySpec.quadratic(0.2)),
    ])
    def test_parse(self, text, expected):
        assert parse_utility(text) == expected

    @pytest.mark.parametrize("text", [
        "cubic:b=1",
        "quadratic",
        "quadratic:b=abc",
        "quadratic:c=0.2",
        "power:a=1",
        "log:a",
    ])
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            parse_utility(text)

    def test_parse_invalid_parameter_is_domain_error(self):
        with pytest.raises(DomainError):
            parse_utility("quadratic:b=-1")

    @pytest.mark.parametrize("u", ALL_FAMILIES, ids=format_utility)
    def test_format_parses_back(self, u):
        assert parse_utility(format_utility(u)) == u

    def test_format_examples(self):
        assert format_utility(QUAD) == "quadratic:b=0.2"
        assert format_utility(SQRT) == "sqrt"
        assert str(EXP) == "exp:a=0.0,c=2.0"
