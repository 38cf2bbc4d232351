"""
Risk Attitude - Parametric Utility Families

Six concave, increasing utility families with closed-form first and second
derivatives, pointwise Arrow-Pratt measures, and monotone inversion:

  quadratic   U = W - bW^2              domain W < 1/(2b)
  log         U = log(W + a)            domain W > -a
  power       U = (W + a)^c             domain W > -a,  0 < c < 1
  negpower    U = -(W + a)^(-c)         domain W > -a
  sqrt        U = sqrt(W)               power with a=0, c=1/2
  exp         U = -exp(-c(W + a))       domain all W

All functions are pure over frozen values and safe to call from any thread.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Tuple

import numpy as np
from scipy import optimize

from .errors import ConvergenceError, DomainError, ParseError, RangeError

logger = logging.getLogger(__name__)

# Inversion: residual acceptance |U(w) - target| <= tol * (1 + |target|)
INVERT_REL_TOL = 1e-12
INVERT_MAX_STEPS = 200

# Bracket search gives up after this many halvings/doublings (covers the
# full float exponent range in both directions)
_MAX_BRACKET_STEPS = 1100

_XTOL = 2e-16
_RTOL = 4 * np.finfo(float).eps


class Family(str, Enum):
    QUADRATIC = "quadratic"
    LOG = "log"
    POWER = "power"
    NEGPOWER = "negpower"
    SQRT = "sqrt"
    EXPONENTIAL = "exp"


class Trend(str, Enum):
    """Direction of a risk measure as wealth grows."""
    DECREASING = "Decreasing"
    CONSTANT = "Constant"
    INCREASING = "Increasing"


class Evaluation(NamedTuple):
    value: float
    first_derivative: float
    second_derivative: float


@dataclass(frozen=True)
class UtilitySpec:
    """A utility family with its parameters.

    ``b`` and ``c`` carry units of inverse wealth, ``a`` is a wealth shift.
    Parameters a family does not use stay at 0.
    """
    family: Family
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0

    def __post_init__(self) -> None:
        fam = self.family
        if fam == Family.QUADRATIC and not self.b > 0:
            raise DomainError(f"quadratic utility needs b > 0, got b={self.b}")
        if fam == Family.LOG and not self.a >= 0:
            raise DomainError(f"log utility needs a >= 0, got a={self.a}")
        if fam == Family.POWER and not (self.a > 0 and 0 < self.c < 1):
            raise DomainError(f"power utility needs a > 0 and 0 < c < 1, got a={self.a}, c={self.c}")
        if fam == Family.NEGPOWER and not (self.a > 0 and self.c > 0):
            raise DomainError(f"negpower utility needs a > 0 and c > 0, got a={self.a}, c={self.c}")
        if fam == Family.EXPONENTIAL and not (self.a >= 0 and self.c > 0):
            raise DomainError(f"exponential utility needs a >= 0 and c > 0, got a={self.a}, c={self.c}")

    # Convenience constructors -------------------------------------------------

    @classmethod
    def quadratic(cls, b: float) -> "UtilitySpec":
        return cls(Family.QUADRATIC, b=b)

    @classmethod
    def log(cls, a: float = 0.0) -> "UtilitySpec":
        return cls(Family.LOG, a=a)

    @classmethod
    def power(cls, a: float, c: float) -> "UtilitySpec":
        return cls(Family.POWER, a=a, c=c)

    @classmethod
    def negpower(cls, a: float, c: float) -> "UtilitySpec":
        return cls(Family.NEGPOWER, a=a, c=c)

    @classmethod
    def sqrt(cls) -> "UtilitySpec":
        return cls(Family.SQRT)

    @classmethod
    def exponential(cls, a: float = 0.0, c: float = 2.0) -> "UtilitySpec":
        return cls(Family.EXPONENTIAL, a=a, c=c)

    def __str__(self) -> str:
        return format_utility(self)


def _power_params(u: UtilitySpec) -> Tuple[float, float]:
    """(a, c) for the power formulas; sqrt is power with a=0, c=1/2."""
    if u.family == Family.SQRT:
        return 0.0, 0.5
    return u.a, u.c


def valid_domain(u: UtilitySpec) -> Tuple[float, float]:
    """Open wealth interval on which U' > 0 and U'' < 0."""
    if u.family == Family.QUADRATIC:
        return -math.inf, 1.0 / (2.0 * u.b)
    if u.family == Family.EXPONENTIAL:
        return -math.inf, math.inf
    a = _power_params(u)[0] if u.family in (Family.POWER, Family.SQRT) else u.a
    return -a, math.inf


def utility_range(u: UtilitySpec) -> Tuple[float, float]:
    """Open interval of utility values attained over the valid domain."""
    if u.family == Family.QUADRATIC:
        return -math.inf, 1.0 / (4.0 * u.b)
    if u.family == Family.LOG:
        return -math.inf, math.inf
    if u.family in (Family.POWER, Family.SQRT):
        return 0.0, math.inf
    return -math.inf, 0.0


def in_domain(u: UtilitySpec, w: float) -> bool:
    lo, hi = valid_domain(u)
    return math.isfinite(w) and lo < w < hi


def _check_domain(u: UtilitySpec, w: float) -> None:
    if not in_domain(u, w):
        lo, hi = valid_domain(u)
        raise DomainError(f"wealth {w!r} outside the valid domain ({lo}, {hi}) of {format_utility(u)}")


def evaluate(u: UtilitySpec, w: float) -> Evaluation:
    """Return (U(w), U'(w), U''(w)) from the family's closed form."""
    _check_domain(u, w)
    fam = u.family
    if fam == Family.QUADRATIC:
        return Evaluation(w - u.b * w * w, 1.0 - 2.0 * u.b * w, -2.0 * u.b)
    if fam == Family.LOG:
        x = w + u.a
        return Evaluation(math.log(x), 1.0 / x, -1.0 / (x * x))
    if fam in (Family.POWER, Family.SQRT):
        a, c = _power_params(u)
        x = w + a
        return Evaluation(x ** c, c * x ** (c - 1.0), c * (c - 1.0) * x ** (c - 2.0))
    if fam == Family.NEGPOWER:
        x = w + u.a
        c = u.c
        return Evaluation(-(x ** -c), c * x ** (-c - 1.0), -c * (c + 1.0) * x ** (-c - 2.0))
    e = math.exp(-u.c * (w + u.a))
    return Evaluation(-e, u.c * e, -u.c * u.c * e)


def ara(u: UtilitySpec, w: float) -> float:
    """Absolute risk aversion -U''(w)/U'(w), in units of 1/wealth.

    Uses the simplified ratio of each family so that CARA stays exactly
    constant and the exponential family does not underflow at large wealth.
    """
    _check_domain(u, w)
    fam = u.family
    if fam == Family.QUADRATIC:
        return 2.0 * u.b / (1.0 - 2.0 * u.b * w)
    if fam == Family.LOG:
        return 1.0 / (w + u.a)
    if fam in (Family.POWER, Family.SQRT):
        a, c = _power_params(u)
        return (1.0 - c) / (w + a)
    if fam == Family.NEGPOWER:
        return (u.c + 1.0) / (w + u.a)
    return u.c


def rra(u: UtilitySpec, w: float) -> float:
    """Relative risk aversion w * ara(u, w) (dimensionless)."""
    if not w > 0:
        raise DomainError(f"relative risk aversion needs positive wealth, got {w!r}")
    return w * ara(u, w)


def ara_trend(u: UtilitySpec) -> Trend:
    """Analytic direction of ARA in wealth."""
    if u.family == Family.QUADRATIC:
        return Trend.INCREASING
    if u.family == Family.EXPONENTIAL:
        return Trend.CONSTANT
    return Trend.DECREASING


def rra_trend(u: UtilitySpec) -> Trend:
    """Analytic direction of RRA in wealth (for positive wealth)."""
    if u.family == Family.SQRT:
        return Trend.CONSTANT
    if u.family == Family.LOG and u.a == 0:
        return Trend.CONSTANT
    return Trend.INCREASING


def _value_or_inf(u: UtilitySpec, w: float) -> float:
    """U(w) for bracket search; saturates to +-inf instead of overflowing."""
    try:
        return evaluate(u, w).value
    except OverflowError:
        return -math.inf if u.family in (Family.EXPONENTIAL, Family.NEGPOWER) else math.inf


def _bracket(u: UtilitySpec, target: float) -> Tuple[float, float]:
    dlo, dhi = valid_domain(u)
    if math.isfinite(dlo):
        anchor = dlo + max(1.0, abs(dlo))
    elif math.isfinite(dhi):
        anchor = dhi - max(1.0, abs(dhi))
    else:
        anchor = 0.0

    def toward(edge: float, start: float) -> float:
        # Walk from start toward the edge until U crosses target
        step = max(1.0, abs(start))
        rising = edge > start
        for k in range(1, _MAX_BRACKET_STEPS):
            if math.isfinite(edge):
                x = edge - (edge - start) * 2.0 ** -k
                if x == edge:
                    break
            else:
                if k > 1000:
                    break
                x = start + step * 2.0 ** k if rising else start - step * 2.0 ** k
                if not math.isfinite(x):
                    break
            v = _value_or_inf(u, x)
            if (rising and v >= target) or (not rising and v <= target):
                return x
        raise ConvergenceError(f"could not bracket utility value {target!r} for {format_utility(u)}")

    if _value_or_inf(u, anchor) >= target:
        return toward(dlo, anchor), anchor
    return anchor, toward(dhi, anchor)


def invert(u: UtilitySpec, target: float) -> float:
    """Return w with U(w) == target, by bisection on the strictly increasing U.

    Raises RangeError when target is outside U's range and ConvergenceError when
    the residual tolerance is not met within the step cap.
    """
    rlo, rhi = utility_range(u)
    if not (math.isfinite(target) and rlo < target < rhi):
        raise RangeError(f"utility value {target!r} outside the range ({rlo}, {rhi}) of {format_utility(u)}")

    lo, hi = _bracket(u, target)
    root, result = optimize.bisect(
        lambda x: _value_or_inf(u, x) - target,
        lo, hi,
        xtol=_XTOL, rtol=_RTOL, maxiter=INVERT_MAX_STEPS,
        full_output=True, disp=False,
    )
    residual = abs(evaluate(u, root).value - target)
    if residual > INVERT_REL_TOL * (1.0 + abs(target)):
        raise ConvergenceError(
            f"inversion of {format_utility(u)} at {target!r} stopped after "
            f"{result.iterations} steps with residual {residual:.3e}"
        )
    return float(root)


# ---------------------------------------------------------------------------
# Canonical text form
# ---------------------------------------------------------------------------

_ALIASES = {
    "quadratic": Family.QUADRATIC,
    "quad": Family.QUADRATIC,
    "log": Family.LOG,
    "power": Family.POWER,
    "negpower": Family.NEGPOWER,
    "sqrt": Family.SQRT,
    "exp": Family.EXPONENTIAL,
    "exponential": Family.EXPONENTIAL,
}

# (required, optional-with-default) parameter names per family
_PARAMS = {
    Family.QUADRATIC: (("b",), {}),
    Family.LOG: ((), {"a": 0.0}),
    Family.POWER: (("a", "c"), {}),
    Family.NEGPOWER: (("a", "c"), {}),
    Family.SQRT: ((), {}),
    Family.EXPONENTIAL: ((), {"a": 0.0, "c": 2.0}),
}


def parse_utility(text: str) -> UtilitySpec:
    """Parse ``quadratic:b=0.2``, ``log:a=0``, ``power:a=1,c=0.5``, ``sqrt``, ``exp:a=0,c=2``."""
    name, _, rest = text.strip().partition(":")
    family = _ALIASES.get(name.strip().lower())
    if family is None:
        raise ParseError(f"unknown utility family '{name}' in '{text}'")
    required, optional = _PARAMS[family]
    params = dict(optional)
    if rest.strip():
        for item in rest.split(","):
            key, sep, raw = item.partition("=")
            key = key.strip()
            if not sep or key not in required + tuple(optional):
                raise ParseError(f"bad parameter '{item.strip()}' for {family.value} in '{text}'")
            try:
                params[key] = float(raw)
            except ValueError:
                raise ParseError(f"parameter {key} is not a number in '{text}'") from None
    missing = [k for k in required if k not in params]
    if missing:
        raise ParseError(f"{family.value} utility needs {', '.join(missing)} in '{text}'")
    return UtilitySpec(family, **params)


def format_utility(u: UtilitySpec) -> str:
    if u.family == Family.SQRT:
        return "sqrt"
    if u.family == Family.QUADRATIC:
        return f"quadratic:b={u.b!r}"
    if u.family == Family.LOG:
        return f"log:a={u.a!r}"
    return f"{u.family.value}:a={u.a!r},c={u.c!r}"
