"""Closed-form mathematics of buyback accretion and earnings enhancement.

Everything here is a pure function of its inputs: accretion screening
against the critical P/E, the earnings-per-share effect of a single
repurchase (instantaneous and at a future horizon), and the compounded
effect of a regular buyback program under geometric earnings growth.

Conventions
-----------
* All rates are annualised decimal fractions (0.02 means 2%).
* Buyback intervals and horizons are in years; quarterly cadence is 0.25.
* ``m`` is the price paid as a fraction of the critical price, ``gamma``
  the buyback spend as a fraction of market capitalisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, RegimeError

# Programs longer than this are compounded via log-space cumulative sums to
# avoid drift in very long running products.
_LOG_SPACE_THRESHOLD = 1000


class ProgramMode(str, Enum):
    """How the buyback-program series discounts each repurchase.

    RECURSIVE compounds the per-buyback enhancement factor step by step,
    which yields one discount factor 1/(1-gamma) per buyback *including*
    the one at t=0 (n+1 factors after n intervals). PAPER_LITERAL applies
    only n such factors. The two differ by exactly one factor of
    1/(1-gamma) at every index; RECURSIVE is the canonical series used by
    the fitting pipeline.
    """

    RECURSIVE = "recursive"
    PAPER_LITERAL = "paper_literal"


@dataclass(frozen=True)
class MarketParams:
    """Economy-level inputs: interest rate and corporate tax rate.

    Attributes
    ----------
    interest_rate : float
        Annualised interest earned on cash, strictly positive (the
        critical P/E is undefined at zero).
    tax_rate : float
        Corporate tax rate in [0, 1).
    period_years : float
        Length of the period over which earnings are stated, in years.
        The interest rate is compounded onto this period so that earnings
        and interest always refer to the same span. Default 1.0 (annual).
    """

    interest_rate: float
    tax_rate: float
    period_years: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.interest_rate) or self.interest_rate <= 0.0:
            raise DomainError(
                "interest_rate must be > 0: the critical P/E is undefined at zero interest"
            )
        if not 0.0 <= self.tax_rate < 1.0:
            raise DomainError("tax_rate must lie in [0, 1)")
        if self.period_years <= 0.0:
            raise DomainError("period_years must be > 0")

    @property
    def retained_fraction(self) -> float:
        """Fraction of pre-tax profit kept after tax."""
        return 1.0 - self.tax_rate

    @property
    def period_rate(self) -> float:
        """Interest accrued over one earnings period (compound convention)."""
        if self.period_years == 1.0:
            return self.interest_rate
        return (1.0 + self.interest_rate) ** self.period_years - 1.0


@dataclass(frozen=True)
class CompanyState:
    """Balance-sheet snapshot needed to price a repurchase.

    ``trading_profit`` and ``minority_charge`` are per period; ``cash`` is
    a stock; ``price`` and ``dividend`` are per share.
    """

    trading_profit: float
    cash: float
    shares: float
    price: float
    dividend: float = 0.0
    minority_charge: float = 0.0

    def __post_init__(self) -> None:
        if self.shares <= 0.0:
            raise DomainError("shares must be > 0")
        if self.price <= 0.0:
            raise DomainError("price must be > 0")
        if self.cash < 0.0:
            raise DomainError("cash must be >= 0")
        if self.dividend < 0.0:
            raise DomainError("dividend must be >= 0")
        if self.minority_charge < 0.0:
            raise DomainError("minority_charge must be >= 0")


@dataclass(frozen=True)
class BuybackPolicy:
    """The unitless drivers of a regular buyback program.

    Attributes
    ----------
    gamma : float
        Spend per buyback as a fraction of market capitalisation, in [0, 1).
    m : float
        Price paid as a fraction of the critical price; m <= 1 is the
        accretive regime.
    xi : float
        Natural geometric growth of earnings per annum.
    iota : float
        Interest growth per annum applied to the cash forgone.
    interval_years : float
        Time between buybacks in years (0.25 for quarterly).
    """

    gamma: float
    m: float
    xi: float = 0.0
    iota: float = 0.0
    interval_years: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise DomainError("gamma must lie in [0, 1): gamma = 1 repurchases the entire company")
        if self.m <= 0.0:
            raise DomainError("m must be > 0")
        if 1.0 + self.xi <= 0.0:
            raise DomainError("1 + xi must be > 0")
        if 1.0 + self.iota <= 0.0:
            raise DomainError("1 + iota must be > 0")
        if self.interval_years <= 0.0:
            raise DomainError("interval_years must be > 0")

    @property
    def growth_ratio(self) -> float:
        """Per-annum ratio of interest accumulation to natural growth."""
        return (1.0 + self.iota) / (1.0 + self.xi)


@dataclass(frozen=True)
class AccretionCheck:
    """Outcome of an accretion screen: verdict plus distance to the threshold."""

    accretive: bool
    margin: float
    critical_pe: float


@dataclass(frozen=True)
class EnhancementSeries:
    """Buyback-program output: per-buyback EPS relative to initial EPS.

    ``enhanced[k]`` is E'_k / E_0 with the program running, ``natural[k]``
    the no-buyback counterpart. Index 0 is the first buyback, applied at
    t = 0, so ``enhanced[0]`` already carries one enhancement factor while
    ``natural[0]`` is exactly 1.
    """

    index: tuple[int, ...]
    enhanced: tuple[float, ...]
    natural: tuple[float, ...]
    mode: ProgramMode

    def __post_init__(self) -> None:
        if not len(self.index) == len(self.enhanced) == len(self.natural):
            raise DomainError("index, enhanced and natural must have equal lengths")


def eps(state: CompanyState, market: MarketParams) -> float:
    """Earnings per share: after-tax trading profit plus cash interest, net
    of the minority charge, divided by the share count.

    May be negative for loss-makers.
    """
    retained = (state.trading_profit + state.cash * market.period_rate) * market.retained_fraction
    return (retained - state.minority_charge) / state.shares


def eps_post_buyback(state: CompanyState, market: MarketParams, spend: float) -> float:
    """Earnings per share after spending ``spend`` on a repurchase at the
    current price.

    The shares retired stop earning their dividend and the cash spent
    (grossed up by the dividend saved per share, ``1 + d/P``) stops earning
    interest. No smallness approximations are applied.

    Raises
    ------
    DomainError
        If ``spend`` is negative or would retire the entire share count.
    """
    if spend < 0.0:
        raise DomainError("spend must be >= 0")
    shares_retired = spend / state.price
    if shares_retired >= state.shares:
        raise DomainError(
            "spend would retire the entire share count: require spend / price < shares"
        )
    cash_left = state.cash - spend * (1.0 + state.dividend / state.price)
    retained = (state.trading_profit + cash_left * market.period_rate) * market.retained_fraction
    return (retained - state.minority_charge) / (state.shares - shares_retired)


def critical_pe(market: MarketParams) -> float:
    """The P/E ratio at which a repurchase leaves earnings per share unchanged.

    Equals 1 / ((1 - tax_rate) * interest_rate) with the rate expressed per
    earnings period. Repurchases at or below this ratio are accretive.
    """
    return 1.0 / market.retained_fraction / market.period_rate


def critical_price(eps_value: float, market: MarketParams) -> float:
    """Per-share price at which a repurchase is EPS-neutral.

    Scales the critical P/E by earnings per share, so its sign follows the
    sign of ``eps_value``; a loss-maker has a negative critical price and
    no accretive repurchase at any positive price.
    """
    return eps_value * critical_pe(market)


def is_accretive(pe: float, market: MarketParams) -> AccretionCheck:
    """Screen a P/E ratio against the critical P/E.

    The boundary ``pe == critical_pe`` counts as accretive (the repurchase
    leaves EPS exactly unchanged). A non-positive P/E signals negative
    earnings, for which no repurchase at a positive price is accretive;
    the margin is still reported as critical_pe - pe.
    """
    if not math.isfinite(pe):
        raise DomainError("pe must be finite")
    threshold = critical_pe(market)
    return AccretionCheck(
        accretive=0.0 < pe <= threshold,
        margin=threshold - pe,
        critical_pe=threshold,
    )


def instantaneous_enhancement(m: float, gamma: float) -> float:
    """Relative EPS change from a single buyback executed now.

    Exact value gamma / (1 - gamma) * (1 - m): positive exactly when the
    price paid is below the critical price (m < 1), zero at the boundary,
    negative above it.
    """
    _check_m_gamma(m, gamma)
    return gamma / (1.0 - gamma) * (1.0 - m)


def instantaneous_enhancement_approx(m: float, s_over_pstar_n: float) -> float:
    """First-order relative EPS change in terms of spend per critical-price
    market cap, ``s_over_pstar_n = S / (P* N)``.

    Evaluates s_over_pstar_n * (1/m - 1). For m, gamma in [0, 1] this
    underestimates the exact enhancement (the discarded series terms are
    positive), so it is a conservative screen.
    """
    if m <= 0.0:
        raise DomainError("m must be > 0")
    return s_over_pstar_n * (1.0 / m - 1.0)


def horizon_enhancement(policy: BuybackPolicy, horizon_years: float) -> float:
    """Ratio of with-buyback to natural EPS a given number of years after a
    single buyback at t = 0.

    Returns (1 - m * gamma * ((1+iota)/(1+xi))**T) / (1 - gamma). At T = 0
    this is 1 plus the instantaneous enhancement; when natural growth
    outpaces interest (xi > iota) it rises towards 1 + gamma/(1-gamma).
    """
    if horizon_years < 0.0:
        raise DomainError("horizon_years must be >= 0")
    ratio = policy.growth_ratio**horizon_years
    return (1.0 - policy.m * policy.gamma * ratio) / (1.0 - policy.gamma)


def horizon_boost_first_order(policy: BuybackPolicy, horizon_years: float) -> float:
    """First-order (in gamma) relative boost at a future horizon.

    Evaluates (1 - m * ((1+iota)/(1+xi))**T) * gamma, the linearisation of
    ``horizon_enhancement(...) - 1``; a lower bound for gamma > 0.
    """
    if horizon_years < 0.0:
        raise DomainError("horizon_years must be >= 0")
    return (1.0 - policy.m * policy.growth_ratio**horizon_years) * policy.gamma


def horizon_boost_limit(policy: BuybackPolicy, first_order: bool = False) -> float:
    """Long-horizon limit of the relative boost when xi > iota.

    The exact form converges to gamma / (1 - gamma); its first-order
    counterpart converges to gamma. Both are exposed because they differ
    at second order in gamma.
    """
    if policy.xi <= policy.iota:
        raise DomainError("the long-horizon limit requires xi > iota")
    if first_order:
        return policy.gamma
    return policy.gamma / (1.0 - policy.gamma)


def prop1_future_eps(
    e_future: float,
    e_now: float,
    m_now: float,
    gamma_now: float,
    accumulation: float,
) -> float:
    """EPS at a future time given a single buyback now.

    ``e_future`` is the natural (no-buyback) EPS at the future time,
    ``e_now`` the EPS when the buyback executes, ``accumulation`` the
    interest accumulation factor between the two times. Returns
    (e_future - m_now * gamma_now * accumulation * e_now) / (1 - gamma_now).
    """
    _check_m_gamma(m_now, gamma_now)
    if accumulation <= 0.0:
        raise DomainError("accumulation factor must be > 0")
    return (e_future - m_now * gamma_now * accumulation * e_now) / (1.0 - gamma_now)


def prop1_future_eps_first_order(
    e_future: float,
    e_now: float,
    m_now: float,
    gamma_now: float,
    accumulation: float,
) -> float:
    """First-order expansion of :func:`prop1_future_eps` around gamma = 0.

    Returns e_future + (e_future - m_now * accumulation * e_now) * gamma_now,
    a lower bound on the exact value whenever m_now * gamma_now <= 1.
    """
    _check_m_gamma(m_now, gamma_now)
    if accumulation <= 0.0:
        raise DomainError("accumulation factor must be > 0")
    return e_future + (e_future - m_now * accumulation * e_now) * gamma_now


def program_series(
    policy: BuybackPolicy, n: int, mode: ProgramMode = ProgramMode.RECURSIVE
) -> EnhancementSeries:
    """EPS trajectory of a buyback program with repurchases every
    ``interval_years``, indexed by buyback count 0..n.

    Each repurchase multiplies future EPS by (1 - m*gamma*rho**t) / (1-gamma)
    where rho = (1+iota)/(1+xi) and t is the time since that repurchase;
    natural growth contributes (1+xi)**(interval*k). RECURSIVE mode keeps
    every such factor; PAPER_LITERAL drops a single 1/(1-gamma).

    Long programs (n > 1000) are compounded in log space so the running
    product does not accumulate rounding drift.

    Raises
    ------
    RegimeError
        If any compounding factor 1 - m*gamma*rho**(interval*k) is
        non-positive, which happens when interest outpaces growth for long
        enough; the enhancement formula is not valid there.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    mode = ProgramMode(mode)
    k = np.arange(n + 1)
    c = policy.interval_years
    discounts = policy.m * policy.gamma * policy.growth_ratio ** (c * k)
    if np.any(discounts >= 1.0):
        bad = int(np.argmax(discounts >= 1.0))
        raise RegimeError(
            f"compounding factor non-positive at buyback {bad}: "
            "m*gamma*((1+iota)/(1+xi))**(c*k) >= 1 leaves the model's validity regime"
        )
    # Number of 1/(1-gamma) factors applied at index k.
    extra = 1 if mode is ProgramMode.RECURSIVE else 0
    if n > _LOG_SPACE_THRESHOLD:
        log_growth = c * k * math.log1p(policy.xi)
        log_enh = log_growth - (k + extra) * math.log1p(-policy.gamma) + np.cumsum(np.log1p(-discounts))
        enhanced = np.exp(log_enh)
        natural = np.exp(log_growth)
    else:
        growth_step = (1.0 + policy.xi) ** c
        natural = growth_step ** k.astype(float)
        enhanced = (
            np.cumprod(1.0 - discounts) * natural / (1.0 - policy.gamma) ** (k + extra)
        )
    return EnhancementSeries(
        index=tuple(int(i) for i in k),
        enhanced=tuple(float(v) for v in enhanced),
        natural=tuple(float(v) for v in natural),
        mode=mode,
    )


def asymptotic_log_growth(policy: BuybackPolicy) -> float:
    """Per-buyback log growth rate of the program series as n -> infinity.

    Equals interval * log(1+xi) - log(1-gamma): natural growth plus the
    pure share-count inflation from repurchasing, which for small gamma is
    roughly gamma per buyback. The no-buyback counterpart is
    interval * log(1+xi). Requires xi >= iota so the per-buyback discounts
    fade rather than compound.
    """
    if policy.xi < policy.iota:
        raise DomainError("asymptotic rate requires xi >= iota")
    return policy.interval_years * math.log1p(policy.xi) - math.log1p(-policy.gamma)


def _check_m_gamma(m: float, gamma: float) -> None:
    if m <= 0.0:
        raise DomainError("m must be > 0")
    if not 0.0 <= gamma < 1.0:
        raise DomainError("gamma must lie in [0, 1)")
