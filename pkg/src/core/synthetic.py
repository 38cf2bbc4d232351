"""
Risk Attitude - Synthetic Markets

Deterministic fixture builders for tests, ``validate`` and ``synth``.

log_agent_market: a market priced by a log-utility (CRRA, lambda = 1) agent.
Returns alternate around a small mean, market caps are drawn from a seeded
RNG independently of everything else, and each period's risk-free yield is
set so that 1 + rf equals the exact relative CE of the agent facing the
two-point lottery of that period's estimated moments. Extraction should
recover lambda close to 1 and no wealth trend.

regime_break_market: the RRA series is prescribed instead. It rises with
wealth up to a cut and then drops to a low level, so the correlation below
the cut is strongly positive while the full-series correlation is negative.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from ..utils.data_io import MarketDataset
from .estimation import MarketRecord, Scheme, YearMonth, estimate_moments
from .lottery import exact_relative_ce, two_point_lottery
from .utility import UtilitySpec

logger = logging.getLogger(__name__)

MEAN_RETURN = 0.004
RETURN_SWING = 0.04
RETURN_JITTER = 0.002
CAP_RANGE = (10.0, 40.0)
WARMUP_RF_ANNUAL = 0.02
START = YearMonth(1991, 1)


def month_range(start: YearMonth, n: int) -> List[YearMonth]:
    out = []
    year, month = start
    for _ in range(n):
        out.append(YearMonth(year, month))
        month += 1
        if month > 12:
            year, month = year + 1, 1
    return out


def _alternating_returns(n: int, rng: Optional[np.random.Generator] = None) -> List[float]:
    swing = [RETURN_SWING if t % 2 == 0 else -RETURN_SWING for t in range(n)]
    if rng is None:
        return [MEAN_RETURN + s for s in swing]
    # jitter keeps rolling windows from repeating the same moments
    noise = rng.normal(0.0, RETURN_JITTER, size=n)
    return [MEAN_RETURN + s + float(e) for s, e in zip(swing, noise)]


def _annualize(rf_pp: float, compounding: str, periods_per_year: int) -> float:
    """Inverse of per_period_rf."""
    if compounding == "simple":
        return rf_pp * periods_per_year
    return math.expm1(periods_per_year * math.log1p(rf_pp))


def log_agent_market(
    n: int = 360,
    seed: int = 7,
    scheme: Optional[Scheme] = None,
    compounding: str = "geometric",
    periods_per_year: int = 12,
    label: str = "SYNTH_LOG",
) -> MarketDataset:
    scheme = scheme or Scheme("expanding", 24)
    rng = np.random.default_rng(seed)
    dates = month_range(START, n)
    caps = rng.uniform(CAP_RANGE[0], CAP_RANGE[1], size=n)
    returns = _alternating_returns(n, rng)

    moments = estimate_moments(list(zip(dates, returns)), scheme)
    agent = UtilitySpec.log()
    rf_annual = {d: WARMUP_RF_ANNUAL for d in dates}
    for entry in moments.entries:
        z_tilde = exact_relative_ce(agent, 1.0, two_point_lottery(entry.mu, entry.sigma))
        rf_annual[entry.date] = _annualize(z_tilde - 1.0, compounding, periods_per_year)

    records = tuple(
        MarketRecord(d, r, float(c), rf_annual[d])
        for d, r, c in zip(dates, returns, caps)
    )
    logger.debug("log-agent market: %d periods, %d priced, seed=%d", n, len(moments.entries), seed)
    return MarketDataset(label, records)


def regime_break_points(
    n_before: int = 80,
    n_after: int = 40,
    cut: float = 27.0,
    seed: int = 11,
) -> Tuple[np.ndarray, np.ndarray]:
    """(wealth, measure): measure = 2 + 0.1 w below the cut, about 0.5 above it."""
    rng = np.random.default_rng(seed)
    w_before = np.linspace(15.0, cut, n_before)
    w_after = np.linspace(cut + 0.5, cut + 5.0, n_after)
    m_before = 2.0 + 0.1 * w_before + rng.normal(0.0, 0.02, n_before)
    m_after = 0.5 + rng.normal(0.0, 0.02, n_after)
    return np.concatenate([w_before, w_after]), np.concatenate([m_before, m_after])


def regime_break_market(
    n_before: int = 80,
    n_after: int = 40,
    cut: float = 27.0,
    seed: int = 11,
    min_obs: int = 24,
    periods_per_year: int = 12,
    label: str = "SYNTH_BREAK",
) -> MarketDataset:
    """Market whose expanding:<min_obs> extraction reproduces regime_break_points."""
    wealth, target = regime_break_points(n_before, n_after, cut, seed)
    warmup = min_obs - 1
    n = warmup + len(wealth)
    dates = month_range(START, n)
    returns = _alternating_returns(n)
    moments = estimate_moments(list(zip(dates, returns)), Scheme("expanding", min_obs))

    caps = [float(wealth[0])] * warmup + [float(w) for w in wealth]
    rf_annual = [WARMUP_RF_ANNUAL] * n
    for k, entry in enumerate(moments.entries):
        second = entry.mu * entry.mu + entry.sigma * entry.sigma
        z_tilde = 1.0 + entry.mu - 0.5 * float(target[k]) * second
        rf_annual[warmup + k] = _annualize(z_tilde - 1.0, "geometric", periods_per_year)

    records = tuple(MarketRecord(d, r, c, f) for d, r, c, f in zip(dates, returns, caps, rf_annual))
    return MarketDataset(label, records)
