"""Utilization, fee yields, frontier coordinates, fee capture, and
recursive-leverage arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Sequence

from vaultscope.data import (
    Dataset,
    EntityId,
    FeeRecord,
    TvlSeries,
    UndefinedMetricError,
)
from vaultscope.comovement import DateWindow

__all__ = [
    "FrontierPoint",
    "annualized_fee_yield",
    "effective_leverage",
    "fee_capture",
    "frontier_points",
    "utilization",
]


def utilization(active_loans_usd: Decimal | float, tvl_usd: Decimal | float) -> float:
    """Active loans over TVL. Values above 1 are legal but suspicious;
    callers should flag them as a possible measurement-base mismatch."""
    loans = float(active_loans_usd)
    tvl = float(tvl_usd)
    if loans < 0:
        raise ValueError("active loans must be nonnegative")
    if tvl <= 0:
        raise UndefinedMetricError("utilization undefined for zero TVL")
    return loans / tvl


def annualized_fee_yield(
    fees: Sequence[FeeRecord], tvl: TvlSeries, window: DateWindow
) -> float:
    """Gross fees over mean TVL, scaled to a 365-day year.

    (sum of gross fees in window / mean observed TVL in window) * 365/days.
    """
    gross = sum(
        (f.gross_fees_usd for f in fees if f.date in window), Decimal(0)
    )
    tvl_values = [float(v) for d, v in tvl.points if d in window]
    if not tvl_values:
        raise UndefinedMetricError("no TVL observations in window")
    mean_tvl = sum(tvl_values) / len(tvl_values)
    if mean_tvl <= 0:
        raise UndefinedMetricError("mean TVL in window is zero")
    return float(gross) / mean_tvl * (365.0 / window.days)


def fee_capture(fees: Iterable[FeeRecord], window: DateWindow | None = None, ratio_of_sums: bool = False) -> float:
    """Mean daily ratio of retained revenue to gross fees, in [0, 1].

    Days with zero gross fees are excluded. ``ratio_of_sums`` switches to
    total retained over total gross for robustness comparison.
    """
    usable = [
        f
        for f in fees
        if f.gross_fees_usd > 0 and (window is None or f.date in window)
    ]
    if not usable:
        raise UndefinedMetricError("no records with positive gross fees in window")
    if ratio_of_sums:
        total_gross = sum((f.gross_fees_usd for f in usable), Decimal(0))
        total_ret = sum((f.retained_revenue_usd for f in usable), Decimal(0))
        return float(total_ret / total_gross)
    ratios = [float(f.retained_revenue_usd / f.gross_fees_usd) for f in usable]
    return sum(ratios) / len(ratios)


@dataclass(frozen=True)
class FrontierPoint:
    entity: EntityId
    mean_utilization: float
    fee_yield: float
    n_days: int
    flagged_over_one: int  # days with utilization > 1


def frontier_points(
    dataset: Dataset,
    entities: Sequence[EntityId] | None = None,
    window: DateWindow | None = None,
) -> tuple[list[FrontierPoint], list[str]]:
    """Per-entity (mean utilization, annualized fee yield) pairs.

    Entities missing loans or fees data in the window are omitted and named
    in the returned warnings. Output is sorted by utilization, descending.
    """
    if entities is None:
        entities = dataset.tvl_entities()
    warnings: list[str] = []
    points: list[FrontierPoint] = []
    for entity in entities:
        series = dataset.tvl_series(entity)
        if window is None:
            if not series.points:
                warnings.append(f"{entity}: no TVL data, omitted")
                continue
            win = DateWindow(series.points[0][0], series.points[-1][0])
        else:
            win = window
        loans = dataset.loans_for(entity)
        tvl_by_day = {d: v for d, v in series.points if d in win}
        daily = []
        flagged = 0
        for d in sorted(loans):
            if d in win and d in tvl_by_day and tvl_by_day[d] > 0:
                u = utilization(loans[d], tvl_by_day[d])
                daily.append(u)
                if u > 1:
                    flagged += 1
        if not daily:
            warnings.append(f"{entity}: no overlapping loans and TVL data, omitted")
            continue
        fees = dataset.fees_for(entity)
        try:
            fee_yield = annualized_fee_yield(fees, series, win)
        except UndefinedMetricError:
            warnings.append(f"{entity}: no fee or TVL data in window, omitted")
            continue
        points.append(
            FrontierPoint(entity, sum(daily) / len(daily), fee_yield, len(daily), flagged)
        )
    points.sort(key=lambda p: (-p.mean_utilization, p.entity.sort_key))
    return points, warnings


def effective_leverage(ltv: float | Decimal) -> float:
    """Recursive-loop leverage 1/(1-LTV); an 0.8 LTV loops to 5x exposure.

    Evaluated in decimal arithmetic so round decimal LTVs produce round
    multipliers (0.8 gives exactly 5.0, not 5.000000000000001).
    """
    if not 0 <= ltv < 1:
        raise ValueError(f"LTV must lie in [0, 1), got {ltv}")
    exact = ltv if isinstance(ltv, Decimal) else Decimal(str(ltv))
    return float(1 / (1 - exact))
