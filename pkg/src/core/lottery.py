"""
Risk Attitude - Lotteries, Certainty Equivalents and Risk Premia

Exact certainty equivalents come from inverting the utility at the expected
utility of a discrete lottery. The approximations are the second-order
Taylor forms around initial wealth w0:

  fair lottery (mu = 0)      rho ~ 1/2 r(w0) sigma^2
  non-fair lottery           rho ~ 1/2 r(w0) (mu^2 + sigma^2)
  ARA from a CE              r(w0) ~ 2 (w0 + mu - z0) / (mu^2 + sigma^2)
  relative premium           rho~ = 1/2 r(w0) w0 (mu_R^2 + sigma_R^2)
  RRA from a relative CE     lambda(w0) = 2 (1 + mu_R - z~) / (mu_R^2 + sigma_R^2)

z~ is a gross per-period return (1 + rate). The (mu - rho)^2 term of the
right-hand expansion is dropped, so for non-fair lotteries the premium
approximation carries a 1/2 r mu^2 bias of the same order as the premium.

Lottery moments use the population convention (probabilities are exact).
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .errors import DegenerateError, ValidationError
from .utility import UtilitySpec, ara, evaluate, invert

logger = logging.getLogger(__name__)

PROBABILITY_SUM_TOL = 1e-12


class Moments(NamedTuple):
    mu: float
    sigma: float


@dataclass(frozen=True)
class DiscreteLottery:
    """Finite outcome/probability pairs.

    Outcomes are absolute wealth changes (Z) or return fractions (R) depending
    on the caller; the class does not care.
    """
    outcomes: Tuple[float, ...]
    probabilities: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcomes", tuple(float(x) for x in self.outcomes))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if not self.outcomes or len(self.outcomes) != len(self.probabilities):
            raise ValidationError(
                f"lottery needs equal, nonzero numbers of outcomes and probabilities "
                f"(got {len(self.outcomes)} and {len(self.probabilities)})"
            )
        if not all(math.isfinite(x) for x in self.outcomes):
            raise ValidationError("lottery outcomes must be finite")
        if any(not p >= 0 for p in self.probabilities):
            raise ValidationError("lottery probabilities must be >= 0")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise ValidationError(f"lottery probabilities sum to {total!r}, not 1")

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[float, float]]) -> "DiscreteLottery":
        return cls(tuple(x for x, _ in pairs), tuple(p for _, p in pairs))

    def scaled(self, t: float) -> "DiscreteLottery":
        """Same probabilities, outcomes multiplied by t."""
        return DiscreteLottery(tuple(t * x for x in self.outcomes), self.probabilities)


def two_point_lottery(mu: float, sigma: float) -> DiscreteLottery:
    """Equiprobable {mu + sigma, mu - sigma}; population moments are (mu, sigma)."""
    if not sigma >= 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma!r}")
    return DiscreteLottery((mu + sigma, mu - sigma), (0.5, 0.5))


def moments(lot: DiscreteLottery) -> Moments:
    x = np.asarray(lot.outcomes)
    p = np.asarray(lot.probabilities)
    mu = float(np.dot(p, x))
    var = float(np.dot(p, (x - mu) ** 2))
    return Moments(mu, math.sqrt(var))


def _expected_utility(u: UtilitySpec, w0: float, lot: DiscreteLottery) -> float:
    return math.fsum(p * evaluate(u, w0 + x).value for x, p in zip(lot.outcomes, lot.probabilities))


def exact_ce(u: UtilitySpec, w0: float, lot: DiscreteLottery) -> float:
    """Certainty equivalent of w0 + Z in final-wealth units: U^-1(E[U(w0 + Z)])."""
    return invert(u, _expected_utility(u, w0, lot))


def exact_risk_premium(u: UtilitySpec, w0: float, lot: DiscreteLottery) -> float:
    """E[w0 + Z] - CE."""
    return w0 + moments(lot).mu - exact_ce(u, w0, lot)


def exact_relative_ce(u: UtilitySpec, w0: float, lot_r: DiscreteLottery) -> float:
    """Gross relative CE: CE of w0(1 + R) divided by w0."""
    if not w0 > 0:
        raise ValidationError(f"relative CE needs positive wealth, got {w0!r}")
    return exact_ce(u, w0, lot_r.scaled(w0)) / w0


def approx_premium_fair(u: UtilitySpec, w0: float, sigma_z: float) -> float:
    if not sigma_z >= 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma_z!r}")
    return 0.5 * ara(u, w0) * (sigma_z * sigma_z)


def approx_premium_nonfair(u: UtilitySpec, w0: float, m: Moments) -> float:
    return 0.5 * ara(u, w0) * (m.mu * m.mu + m.sigma * m.sigma)


def ara_from_ce(w0: float, mu_z: float, sigma_z: float, z0: float) -> float:
    """Absolute risk aversion implied by an observed certainty equivalent z0."""
    second = mu_z * mu_z + sigma_z * sigma_z
    if second == 0:
        raise DegenerateError("riskless zero-mean lottery carries no curvature information (mu^2 + sigma^2 = 0)")
    return 2.0 * (w0 + mu_z - z0) / second


def relative_premium(u: UtilitySpec, w0: float, m_r: Moments) -> float:
    """Premium as a fraction of w0 for the return lottery R (Z = R w0)."""
    if not w0 > 0:
        raise ValidationError(f"relative premium needs positive wealth, got {w0!r}")
    return 0.5 * ara(u, w0) * w0 * (m_r.mu * m_r.mu + m_r.sigma * m_r.sigma)


def approx_relative_premium_fair(u: UtilitySpec, w0: float, sigma_r: float) -> float:
    return relative_premium(u, w0, Moments(0.0, sigma_r))


def rra_from_relative_ce(mu_r: float, sigma_r: float, z_tilde: float) -> float:
    """Relative risk aversion implied by a gross relative CE z~.

    May be negative when z~ > 1 + mu_r; the value is returned as-is.
    """
    second = mu_r * mu_r + sigma_r * sigma_r
    if second == 0:
        raise DegenerateError("return lottery with mu_R = sigma_R = 0 carries no curvature information")
    return 2.0 * (1.0 + mu_r - z_tilde) / second
