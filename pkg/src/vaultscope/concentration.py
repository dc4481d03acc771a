"""Herfindahl-Hirschman concentration indices over chains, risk-factor
families, and issuers.

HHI is reported on [0, 1]: 1 means full concentration in a single bucket,
1/n a uniform spread over n occupied buckets. Buckets with zero weight do
not count toward n.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from typing import Iterable, Mapping

from vaultscope.data import (
    AssetClassification,
    Dataset,
    EntityId,
    PositionSnapshot,
    UndefinedMetricError,
)

__all__ = [
    "HhiPoint",
    "IssuerConcentration",
    "hhi",
    "chain_hhi",
    "factor_hhi",
    "issuer_concentration",
]


@dataclass(frozen=True)
class HhiPoint:
    entity: EntityId
    date: date
    hhi: float
    n_buckets: int


@dataclass(frozen=True)
class IssuerConcentration:
    shares: dict[str, float]
    hhi: float
    n_buckets: int
    top: tuple[tuple[str, float], ...]


def hhi(amounts: Iterable[float | Decimal]) -> tuple[float, int]:
    """Sum of squared shares over positive buckets; returns (hhi, n_buckets)."""
    values = [float(a) for a in amounts]
    if any(v < 0 for v in values):
        raise ValueError("bucket amounts must be nonnegative")
    positive = [v for v in values if v > 0]
    total = sum(positive)
    if total <= 0:
        raise UndefinedMetricError("all buckets are zero; HHI undefined")
    return sum((v / total) ** 2 for v in positive), len(positive)


def chain_hhi(dataset: Dataset, entity: EntityId, on: date) -> HhiPoint:
    """Concentration of an entity's TVL across chains on one day."""
    by_chain = dataset.chains_of(entity, on)
    if not by_chain:
        raise UndefinedMetricError(f"{entity} has no TVL on {on}")
    value, n = hhi(by_chain.values())
    return HhiPoint(entity, on, value, n)


def factor_hhi(
    positions: Iterable[PositionSnapshot],
    classification: AssetClassification,
) -> HhiPoint:
    """Concentration across risk-factor families, not individual tokens.

    Position amounts are summed per family before shares are squared, so an
    asset and its wrapped or staked variants count as one bucket. Positions
    must belong to a single curator and date.
    """
    positions = list(positions)
    if not positions:
        raise UndefinedMetricError("no positions; factor HHI undefined")
    curators = {p.curator for p in positions}
    dates = {p.date for p in positions}
    if len(curators) > 1 or len(dates) > 1:
        raise ValueError("factor_hhi expects positions for one curator on one date")
    by_family: dict[str, Decimal] = {}
    for p in positions:
        fam = classification.family_for(p.asset)
        by_family[fam] = by_family.get(fam, Decimal(0)) + p.amount_usd
    value, n = hhi(v for _, v in sorted(by_family.items()))
    return HhiPoint(curators.pop(), dates.pop(), value, n)


def issuer_concentration(
    positions: Iterable[PositionSnapshot],
    issuer_of: Mapping[str, str] | None = None,
    top_n: int = 5,
    classification: AssetClassification | None = None,
) -> IssuerConcentration:
    """Per-issuer shares of position value, with HHI and the top-n issuers.

    Assets without an issuer mapping fall back to the classification's
    issuer (the asset id itself by default) or to "unknown" when an explicit
    mapping is supplied. Ties in the top-n are broken lexicographically.
    """
    totals: dict[str, Decimal] = {}
    for p in positions:
        if issuer_of is not None:
            issuer = issuer_of.get(p.asset, "unknown")
        elif classification is not None:
            issuer = classification.issuer_for(p.asset)
        else:
            issuer = p.asset
        totals[issuer] = totals.get(issuer, Decimal(0)) + p.amount_usd
    grand = sum(totals.values(), Decimal(0))
    if grand <= 0:
        raise UndefinedMetricError("total position value is zero; shares undefined")
    shares = {i: float(v / grand) for i, v in sorted(totals.items()) if v > 0}
    value, n = hhi(totals.values())
    ranked = sorted(shares.items(), key=lambda kv: (-kv[1], kv[0]))
    return IssuerConcentration(shares, value, n, tuple(ranked[:top_n]))
