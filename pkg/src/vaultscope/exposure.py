"""Curator portfolio-composition shares by asset class over time.

A curator's share in a class is the USD deposited in that class divided by
the curator's aggregate position value on the same day, so shares across
the class partition sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from typing import Iterable

from vaultscope.data import (
    AssetClass,
    AssetClassification,
    Dataset,
    EntityId,
    PositionSnapshot,
    UndefinedMetricError,
)

__all__ = ["ExposurePanel", "class_share", "exposure_panel", "curator_tvl_shares"]

ALL_CLASSES = tuple(AssetClass)


@dataclass(frozen=True)
class ExposurePanel:
    """Rows of (date, curator, class, share) plus skipped zero-TVL rows."""

    rows: tuple[tuple[date, EntityId, AssetClass, float], ...]
    skipped_zero_total: int
    merged_rwa_into_stable: bool


def _class_amounts(
    positions: Iterable[PositionSnapshot],
    classification: AssetClassification,
    merge_rwa_into_stable: bool = False,
) -> dict[AssetClass, Decimal]:
    amounts = {c: Decimal(0) for c in ALL_CLASSES}
    for p in positions:
        cls = classification.class_for(p.asset)
        if merge_rwa_into_stable and cls is AssetClass.rwa:
            cls = AssetClass.stable
        amounts[cls] += p.amount_usd
    return amounts


def class_share(
    positions: Iterable[PositionSnapshot],
    classification: AssetClassification,
    asset_class: AssetClass,
    merge_rwa_into_stable: bool = False,
) -> float:
    """Fraction of a curator's aggregate value held in one asset class."""
    amounts = _class_amounts(positions, classification, merge_rwa_into_stable)
    total = sum(amounts.values(), Decimal(0))
    if total <= 0:
        raise UndefinedMetricError("aggregate position value is zero; share undefined")
    return float(amounts[asset_class] / total)


def exposure_panel(
    dataset: Dataset,
    classes: tuple[AssetClass, ...] = ALL_CLASSES,
    merge_rwa_into_stable: bool = False,
) -> ExposurePanel:
    """Per-(curator, date) class shares for every day the curator has positions.

    Days where a curator's aggregate is zero are omitted and counted.
    """
    rows: list[tuple[date, EntityId, AssetClass, float]] = []
    skipped = 0
    emit_classes = [c for c in classes if not (merge_rwa_into_stable and c is AssetClass.rwa)]
    for on in dataset.position_dates():
        day = dataset.positions_for(on=on)
        curators = sorted({p.curator for p in day}, key=lambda e: e.sort_key)
        for curator in curators:
            mine = [p for p in day if p.curator == curator]
            amounts = _class_amounts(mine, dataset.classification, merge_rwa_into_stable)
            total = sum(amounts.values(), Decimal(0))
            if total <= 0:
                skipped += 1
                continue
            for cls in emit_classes:
                rows.append((on, curator, cls, float(amounts[cls] / total)))
    return ExposurePanel(tuple(rows), skipped, merge_rwa_into_stable)


def curator_tvl_shares(dataset: Dataset, on: date) -> dict[EntityId, float]:
    """Each curator's share of total curator-managed value on a date."""
    totals: dict[EntityId, Decimal] = {}
    for p in dataset.positions:
        if p.date == on:
            totals[p.curator] = totals.get(p.curator, Decimal(0)) + p.amount_usd
    grand = sum(totals.values(), Decimal(0))
    if grand <= 0:
        raise UndefinedMetricError(f"total curated TVL on {on} is zero")
    return {
        c: float(v / grand)
        for c, v in sorted(totals.items(), key=lambda kv: kv[0].sort_key)
    }
