"""Fitting the natural growth rate and deriving m, gamma and tax rates
from realized series.

The fit treats realized EPS observations as the buyback-program series
scaled by an initial level, and minimises the sum of squared residuals
over (growth rate, initial level) with the remaining program drivers held
fixed. Ratio estimators turn raw market series into the unitless inputs
the model wants, flagging periods they cannot use instead of dropping
them silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np
from scipy import optimize

from .core_model import BuybackPolicy, MarketParams, ProgramMode, critical_pe, program_series
from .errors import DomainError, RegimeError

# Search box for the natural growth rate and the initial-level multiplier.
XI_RANGE = (-0.5, 1.0)
E0_RANGE_FACTORS = (0.1, 10.0)
_GRID_XI_POINTS = 31
_GRID_E0_POINTS = 21
_MAX_ITER = 10_000
_MIN_OBSERVATIONS = 4

# Quarter-end labels in real filings stray a little from calendar quarter
# ends (e.g. a fiscal quarter ending on the last Thursday of March).
_QUARTER_END_SLACK_DAYS = 3
_GAP_TOLERANCE_DAYS = 1.0


@dataclass(frozen=True)
class EarningsSeries:
    """Realized EPS observations on a uniform grid.

    ``periods`` are period-end dates, strictly increasing. For quarterly
    data (period_length_years == 0.25) each date must fall within a few
    days of its calendar quarter end and consecutive observations must sit
    in consecutive quarters; other period lengths are checked for uniform
    numeric spacing.
    """

    periods: tuple[date, ...]
    values: tuple[float, ...]
    period_length_years: float = 0.25

    def __post_init__(self) -> None:
        if len(self.periods) != len(self.values):
            raise DomainError("periods and values must have equal lengths")
        if len(self.periods) == 0:
            raise DomainError("series must not be empty")
        if self.period_length_years <= 0.0:
            raise DomainError("period_length_years must be > 0")
        for a, b in zip(self.periods, self.periods[1:]):
            if b <= a:
                raise DomainError(f"period labels must be strictly increasing: {a} before {b}")
        if self.period_length_years == 0.25:
            self._check_quarterly_grid()
        else:
            self._check_numeric_spacing()

    def _check_quarterly_grid(self) -> None:
        indices = [_quarter_index(p) for p in self.periods]
        for a, b, pa, pb in zip(indices, indices[1:], self.periods, self.periods[1:]):
            if b - a != 1:
                raise DomainError(f"periods {pa} and {pb} are not consecutive quarters")
        for p in self.periods:
            if abs((p - _quarter_end(p)).days) > _QUARTER_END_SLACK_DAYS:
                raise DomainError(f"period end {p} is not near a calendar quarter end")

    def _check_numeric_spacing(self) -> None:
        nominal = self.period_length_years * 365.25
        for a, b in zip(self.periods, self.periods[1:]):
            gap = (b - a).days
            if abs(gap - nominal) > _GAP_TOLERANCE_DAYS:
                raise DomainError(
                    f"gap of {gap} days between {a} and {b} deviates from the "
                    f"nominal {nominal:.2f}-day period by more than {_GAP_TOLERANCE_DAYS} day(s)"
                )


@dataclass(frozen=True)
class FitResult:
    """Outcome of the natural-growth fit."""

    xi_hat: float
    e0_hat: float
    sse: float
    iterations: int
    converged: bool

    def __post_init__(self) -> None:
        if self.sse < 0.0:
            raise DomainError("sse must be >= 0")


@dataclass(frozen=True)
class SummaryStats:
    """Median with lower and upper 20th percentiles."""

    median: float
    p20: float
    p80: float


@dataclass(frozen=True)
class FlaggedSeries:
    """Per-period values where unusable periods are None, with reasons."""

    values: tuple[float | None, ...]
    flags: tuple[tuple[int, str], ...] = ()


@dataclass(frozen=True)
class RatioSeries:
    """Per-period m and/or gamma estimates with summary statistics.

    Either column may be absent when only one ratio was estimated; flags
    record periods that could not be evaluated (index, reason).
    """

    periods: tuple[str, ...]
    m_values: tuple[float | None, ...] | None = None
    gamma_values: tuple[float | None, ...] | None = None
    summary: dict[str, SummaryStats] | None = None
    flags: tuple[tuple[int, str], ...] = ()


def fit_natural_growth(
    series: EarningsSeries,
    policy: BuybackPolicy,
    mode: ProgramMode = ProgramMode.RECURSIVE,
) -> FitResult:
    """Least-squares estimate of the natural growth rate and initial EPS.

    The model for observation n is e0 * program_series(...).enhanced[n]
    with m, gamma, iota and the buyback interval taken from ``policy`` and
    the growth rate free. A coarse grid over growth in [-0.5, 1.0] and
    initial level in [0.1, 10] times the first observation seeds a
    Nelder-Mead refinement (restarted once at its own solution, a standard
    guard against a degenerate simplex). Deterministic for identical
    inputs.

    Non-convergence inside the iteration cap is reported via
    ``converged=False`` with the best point found, not an exception.
    """
    if len(series.values) < _MIN_OBSERVATIONS:
        raise DomainError(
            f"series too short: fitting needs at least {_MIN_OBSERVATIONS} observations, "
            f"got {len(series.values)}"
        )
    if abs(policy.interval_years - series.period_length_years) > 1e-9:
        raise DomainError(
            "policy interval_years must equal the series period length: the fit pairs "
            "the n-th observation with the n-th buyback"
        )
    observed = np.asarray(series.values, dtype=float)
    if observed[0] <= 0.0:
        raise DomainError("first observation must be positive to scale the initial-level grid")
    n_last = len(observed) - 1
    mode = ProgramMode(mode)

    def normalized_curve(xi: float) -> np.ndarray | None:
        if xi <= -1.0 + 1e-9:
            return None
        trial = BuybackPolicy(
            gamma=policy.gamma, m=policy.m, xi=xi, iota=policy.iota,
            interval_years=policy.interval_years,
        )
        try:
            return np.asarray(program_series(trial, n_last, mode).enhanced)
        except RegimeError:
            return None

    def sse(params: np.ndarray) -> float:
        xi, e0 = float(params[0]), float(params[1])
        if e0 <= 0.0:
            return math.inf
        curve = normalized_curve(xi)
        if curve is None:
            return math.inf
        resid = observed - e0 * curve
        return float(resid @ resid)

    xi_grid = np.linspace(*XI_RANGE, _GRID_XI_POINTS)
    e0_grid = np.geomspace(
        E0_RANGE_FACTORS[0] * observed[0], E0_RANGE_FACTORS[1] * observed[0], _GRID_E0_POINTS
    )
    best_val, best_xi, best_e0 = math.inf, xi_grid[0], e0_grid[0]
    for xi in xi_grid:
        curve = normalized_curve(float(xi))
        if curve is None:
            continue
        resid = observed[None, :] - e0_grid[:, None] * curve[None, :]
        values = np.einsum("ij,ij->i", resid, resid)
        idx = int(np.argmin(values))
        if values[idx] < best_val:
            best_val, best_xi, best_e0 = float(values[idx]), float(xi), float(e0_grid[idx])

    options = dict(xatol=1e-9, fatol=1e-18, maxiter=_MAX_ITER, maxfev=_MAX_ITER)
    first = optimize.minimize(sse, [best_xi, best_e0], method="Nelder-Mead", options=options)
    second = optimize.minimize(sse, first.x, method="Nelder-Mead", options=options)
    return FitResult(
        xi_hat=float(second.x[0]),
        e0_hat=float(second.x[1]),
        sse=float(second.fun),
        iterations=int(first.nit + second.nit),
        converged=bool(first.success and second.success),
    )


def effective_tax_rate(
    pretax: tuple[float, ...] | list[float],
    posttax: tuple[float, ...] | list[float],
) -> FlaggedSeries:
    """Per-period realized tax burden (pretax - posttax) / pretax.

    Periods with zero pre-tax profit are excluded from the series and
    flagged with their index rather than silently dropped.
    """
    if len(pretax) != len(posttax):
        raise DomainError("pretax and posttax series must have equal lengths")
    values: list[float | None] = []
    flags: list[tuple[int, str]] = []
    for i, (pre, post) in enumerate(zip(pretax, posttax)):
        if pre == 0.0:
            values.append(None)
            flags.append((i, "zero pre-tax profit; period excluded"))
        else:
            values.append((pre - post) / pre)
    return FlaggedSeries(values=tuple(values), flags=tuple(flags))


def estimate_m(
    pe_values: tuple[float | None, ...] | list[float | None],
    markets: tuple[MarketParams | None, ...] | list[MarketParams | None],
    periods: tuple[str, ...] | None = None,
) -> RatioSeries:
    """Per-period price paid as a fraction of the critical price,
    pe / critical_pe, with median and 20/80 percentile summary.

    A period is flagged when its P/E is missing or non-positive (negative
    earnings have no accretive price) or its market parameters are missing
    (e.g. an undefined critical P/E upstream).
    """
    if len(pe_values) != len(markets):
        raise DomainError("pe and market series must have equal lengths")
    labels = _labels(periods, len(pe_values))
    values: list[float | None] = []
    flags: list[tuple[int, str]] = []
    for i, (pe, market) in enumerate(zip(pe_values, markets)):
        if market is None:
            values.append(None)
            flags.append((i, "market parameters unavailable; critical P/E undefined"))
        elif pe is None:
            values.append(None)
            flags.append((i, "P/E missing"))
        elif pe <= 0.0:
            values.append(None)
            flags.append((i, "non-positive P/E (negative earnings)"))
        else:
            values.append(pe / critical_pe(market))
    return RatioSeries(
        periods=labels,
        m_values=tuple(values),
        summary={"m": summarize(values)} if any(v is not None for v in values) else None,
        flags=tuple(flags),
    )


def estimate_gamma(
    buyback_spend: tuple[float | None, ...] | list[float | None],
    market_cap: tuple[float | None, ...] | list[float | None],
    periods: tuple[str, ...] | None = None,
) -> RatioSeries:
    """Per-period buyback spend as a fraction of market capitalisation,
    with median and 20/80 percentile summary.

    Periods with missing or non-positive market cap, missing or negative
    spend, or spend at or above the full market cap are flagged.
    """
    if len(buyback_spend) != len(market_cap):
        raise DomainError("spend and market-cap series must have equal lengths")
    labels = _labels(periods, len(buyback_spend))
    values: list[float | None] = []
    flags: list[tuple[int, str]] = []
    for i, (spend, cap) in enumerate(zip(buyback_spend, market_cap)):
        if cap is None or cap <= 0.0:
            values.append(None)
            flags.append((i, "market capitalisation missing or non-positive"))
        elif spend is None:
            values.append(None)
            flags.append((i, "buyback spend missing"))
        elif spend < 0.0:
            values.append(None)
            flags.append((i, "negative buyback spend"))
        elif spend >= cap:
            values.append(None)
            flags.append((i, "spend would repurchase the entire market capitalisation"))
        else:
            values.append(spend / cap)
    return RatioSeries(
        periods=labels,
        gamma_values=tuple(values),
        summary={"gamma": summarize(values)} if any(v is not None for v in values) else None,
        flags=tuple(flags),
    )


def attribution(observed_growth: float, natural_growth: float) -> float:
    """Fraction of observed EPS growth attributable to buybacks.

    Both arguments are growth amounts above baseline (0.88 for an 88%
    rise); returns 1 - natural / observed.
    """
    if observed_growth <= 0.0:
        raise DomainError("observed_growth must be > 0")
    return 1.0 - natural_growth / observed_growth


def summarize(values: list[float | None] | tuple[float | None, ...]) -> SummaryStats:
    """Median and 20/80 percentiles over the present values."""
    present = [v for v in values if v is not None]
    if not present:
        raise DomainError("no values to summarize")
    arr = np.asarray(present, dtype=float)
    return SummaryStats(
        median=float(np.median(arr)),
        p20=float(np.percentile(arr, 20)),
        p80=float(np.percentile(arr, 80)),
    )


def _labels(periods: tuple[str, ...] | None, n: int) -> tuple[str, ...]:
    if periods is None:
        return tuple(str(i) for i in range(n))
    if len(periods) != n:
        raise DomainError("periods must match the series length")
    return tuple(periods)


def _quarter_index(d: date) -> int:
    return d.year * 4 + (d.month - 1) // 3


def _quarter_end(d: date) -> date:
    last_month = ((d.month - 1) // 3) * 3 + 3
    if last_month == 12:
        return date(d.year, 12, 31)
    return date(d.year, last_month + 1, 1) - timedelta(days=1)
