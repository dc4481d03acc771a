"""vaultscope: deterministic analytics for modular DeFi credit snapshots.

Concentration indices, exposure shares, co-movement and tail statistics,
curator overlap networks with centralities, fee economics, and a
machine-readable transparency disclosure bundle.
"""

from vaultscope.data import (
    AssetClass,
    AssetClassification,
    Dataset,
    DatasetError,
    DependencyEdge,
    DependencyKind,
    EntityId,
    EntityKind,
    Event,
    EventKind,
    FeeRecord,
    LiquidityProfile,
    LoanObservation,
    PositionSnapshot,
    TvlObservation,
    TvlSeries,
    UNBOUNDED,
    UndefinedMetricError,
    UnknownAssetError,
    align_calendar,
    load_dataset,
    market_share,
    parse_dataset,
    write_dataset,
)

__version__ = "0.1.0"
