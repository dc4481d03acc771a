"""Domain types, snapshot-file parsing, validation, and calendar alignment.

Every other module consumes the immutable types defined here. USD amounts
are kept as exact decimals at ingestion; statistical kernels convert to
binary floats at their boundary. Dates are UTC calendar days for all panel
data; only event logs carry second-resolution timestamps.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from decimal import Decimal, InvalidOperation
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

__all__ = [
    "AssetClass",
    "AssetClassification",
    "AlignedSeries",
    "Dataset",
    "DatasetError",
    "DependencyEdge",
    "DependencyKind",
    "EntityId",
    "EntityKind",
    "Event",
    "EventKind",
    "FeeRecord",
    "LiquidityProfile",
    "LoanObservation",
    "ParseIssue",
    "PositionSnapshot",
    "TvlObservation",
    "TvlSeries",
    "UndefinedMetricError",
    "UnknownAssetError",
    "UNBOUNDED",
    "align_calendar",
    "market_share",
    "parse_dataset",
    "write_dataset",
]

UNBOUNDED = Decimal("Infinity")

SCHEMA_V1 = "v1"

# canonical file stem -> header columns (csv tables only)
_CSV_HEADERS = {
    "tvl": ["entity_kind", "entity_name", "chain", "date", "tvl_usd"],
    "positions": ["date", "curator", "vault", "pool", "chain", "asset", "amount_usd"],
    "loans": ["entity_kind", "entity_name", "date", "active_loans_usd"],
    "fees": ["entity_kind", "entity_name", "date", "gross_fees_usd", "retained_revenue_usd"],
    "events": ["timestamp", "entity_kind", "entity_name", "kind", "payload"],
    "liquidity": ["asset", "slippage_bps", "depth_usd"],
    "deps": ["from_vault", "to_target", "kind"],
}


class VaultscopeError(Exception):
    """Base class for all engine errors."""


class UndefinedMetricError(VaultscopeError):
    """A metric has no defined value for the given inputs (zero totals, no data)."""


class UnknownAssetError(VaultscopeError):
    """An asset could not be resolved by the classification under strict policy."""


@dataclass(frozen=True)
class ParseIssue:
    file: str
    line: int | None
    column: str | None
    message: str

    def __str__(self) -> str:
        loc = self.file
        if self.line is not None:
            loc += f":{self.line}"
        if self.column:
            loc += f" [{self.column}]"
        return f"{loc}: {self.message}"


class DatasetError(VaultscopeError):
    """Raised when parsing or validation finds one or more problems."""

    def __init__(self, issues: Sequence[ParseIssue]):
        self.issues = tuple(issues)
        summary = "; ".join(str(i) for i in self.issues[:5])
        if len(self.issues) > 5:
            summary += f" (+{len(self.issues) - 5} more)"
        super().__init__(f"{len(self.issues)} dataset problem(s): {summary}")


class EntityKind(str, Enum):
    protocol = "protocol"
    curator = "curator"
    vault = "vault"


class AssetClass(str, Enum):
    stable = "stable"
    volatile = "volatile"
    commodity = "commodity"
    rwa = "rwa"


class EventKind(str, Enum):
    shock = "shock"
    param_change = "param_change"
    attestation = "attestation"
    credit_decision = "credit_decision"


class DependencyKind(str, Enum):
    market_allocation = "market_allocation"
    meta_vault = "meta_vault"


@dataclass(frozen=True)
class EntityId:
    kind: EntityKind
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("entity name must be nonempty")

    @property
    def sort_key(self) -> tuple[str, str]:
        return (self.kind.value, self.name)

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.name}"


@dataclass(frozen=True)
class TvlObservation:
    entity: EntityId
    chain: str
    date: date
    tvl_usd: Decimal

    def __post_init__(self):
        if self.tvl_usd < 0:
            raise ValueError("tvl_usd must be nonnegative")


@dataclass(frozen=True)
class TvlSeries:
    """Daily TVL for one entity, dates strictly increasing."""

    entity: EntityId
    points: tuple[tuple[date, Decimal], ...]

    def __post_init__(self):
        last = None
        for d, v in self.points:
            if last is not None and d <= last:
                raise ValueError(f"dates must be strictly increasing, got {d} after {last}")
            if v < 0:
                raise ValueError("tvl_usd must be nonnegative")
            last = d

    @property
    def dates(self) -> tuple[date, ...]:
        return tuple(d for d, _ in self.points)

    def values_float(self) -> list[float]:
        return [float(v) for _, v in self.points]

    def window(self, start: date | None = None, end: date | None = None) -> "TvlSeries":
        pts = tuple(
            (d, v)
            for d, v in self.points
            if (start is None or d >= start) and (end is None or d <= end)
        )
        return TvlSeries(self.entity, pts)


@dataclass(frozen=True)
class PositionSnapshot:
    date: date
    curator: EntityId
    vault: str
    pool: str
    chain: str
    asset: str
    amount_usd: Decimal

    def __post_init__(self):
        if self.curator.kind is not EntityKind.curator:
            raise ValueError("position curator must have kind=curator")
        if self.amount_usd < 0:
            raise ValueError("amount_usd must be nonnegative")

    @property
    def key(self) -> tuple:
        return (self.date, self.curator.name, self.vault, self.pool, self.asset)


@dataclass(frozen=True)
class AssetClassification:
    """Total mapping from asset id to class and risk-factor family.

    Unknown assets either raise (strict) or fall back to volatile with the
    asset id as its own family (default_policy="volatile").
    """

    class_of: Mapping[str, AssetClass]
    family_of: Mapping[str, str]
    issuer_of: Mapping[str, str] = field(default_factory=dict)
    default_policy: str = "strict"

    def __post_init__(self):
        if self.default_policy not in ("strict", "volatile"):
            raise ValueError(f"unknown default_policy {self.default_policy!r}")
        for a, fam in self.family_of.items():
            if not fam:
                raise ValueError(f"empty family label for asset {a!r}")

    def class_for(self, asset: str) -> AssetClass:
        try:
            return self.class_of[asset]
        except KeyError:
            if self.default_policy == "strict":
                raise UnknownAssetError(f"asset {asset!r} not classified (strict policy)")
            return AssetClass.volatile

    def family_for(self, asset: str) -> str:
        try:
            return self.family_of[asset]
        except KeyError:
            if self.default_policy == "strict":
                raise UnknownAssetError(f"asset {asset!r} not classified (strict policy)")
            return asset

    def issuer_for(self, asset: str) -> str:
        # issuer defaults to the asset id itself: one token, one issuer
        return self.issuer_of.get(asset, asset)


@dataclass(frozen=True)
class FeeRecord:
    entity: EntityId
    date: date
    gross_fees_usd: Decimal
    retained_revenue_usd: Decimal

    def __post_init__(self):
        if self.gross_fees_usd < 0:
            raise ValueError("gross_fees_usd must be nonnegative")
        if not (0 <= self.retained_revenue_usd <= self.gross_fees_usd):
            raise ValueError("retained_revenue_usd must lie in [0, gross_fees_usd]")


@dataclass(frozen=True)
class LoanObservation:
    entity: EntityId
    date: date
    active_loans_usd: Decimal

    def __post_init__(self):
        if self.active_loans_usd < 0:
            raise ValueError("active_loans_usd must be nonnegative")


@dataclass(frozen=True)
class Event:
    timestamp: int  # seconds since epoch, UTC
    entity: EntityId
    kind: EventKind
    payload: Mapping[str, str]

    def __post_init__(self):
        if self.kind is EventKind.credit_decision:
            if "cohort" not in self.payload:
                raise ValueError("credit_decision event requires payload key 'cohort'")
            outcome = self.payload.get("outcome")
            if outcome not in ("approve", "reject"):
                raise ValueError("credit_decision outcome must be 'approve' or 'reject'")

    @property
    def sort_key(self) -> tuple:
        payload_canon = json.dumps(dict(sorted(self.payload.items())))
        return (self.timestamp, self.entity.sort_key, self.kind.value, payload_canon)


@dataclass(frozen=True)
class LiquidityProfile:
    """Depth available per asset at each slippage level, in USD.

    ``UNBOUNDED`` marks effectively infinite depth. Depth must be
    nondecreasing in slippage for the same asset.
    """

    depth_at_slippage: Mapping[tuple[str, int], Decimal]

    def __post_init__(self):
        by_asset: dict[str, list[tuple[int, Decimal]]] = {}
        for (asset, bps), depth in self.depth_at_slippage.items():
            if bps <= 0:
                raise ValueError(f"slippage_bps must be positive, got {bps}")
            if depth < 0:
                raise ValueError("depth must be nonnegative")
            by_asset.setdefault(asset, []).append((bps, depth))
        for asset, entries in by_asset.items():
            entries.sort()
            for (b1, d1), (b2, d2) in zip(entries, entries[1:]):
                if d2 < d1:
                    raise ValueError(
                        f"depth for {asset!r} decreases from {d1} at {b1}bps to {d2} at {b2}bps"
                    )

    def assets(self) -> set[str]:
        return {a for a, _ in self.depth_at_slippage}

    def depth_at(self, asset: str, slippage_bps: int) -> Decimal | None:
        """Depth usable at up to ``slippage_bps`` slippage.

        Returns the entry at the largest recorded slippage <= the requested
        one, 0 if the asset only has entries above it, and None if the asset
        is absent from the profile entirely.
        """
        entries = [
            (b, d) for (a, b), d in self.depth_at_slippage.items() if a == asset
        ]
        if not entries:
            return None
        usable = [(b, d) for b, d in entries if b <= slippage_bps]
        if not usable:
            return Decimal(0)
        return max(usable)[1]


@dataclass(frozen=True)
class DependencyEdge:
    from_vault: str
    to_target: str
    kind: DependencyKind

    def __post_init__(self):
        if self.kind is DependencyKind.meta_vault and self.from_vault == self.to_target:
            raise ValueError("meta_vault self-allocation is an error")


@dataclass(frozen=True)
class Dataset:
    """A fully validated snapshot dataset; all tables sorted by key.

    Accessors build lazy indexes on first use so per-date loops stay linear;
    the cache is invisible to equality and hashing.
    """

    tvl: tuple[TvlObservation, ...] = ()
    positions: tuple[PositionSnapshot, ...] = ()
    loans: tuple[LoanObservation, ...] = ()
    fees: tuple[FeeRecord, ...] = ()
    events: tuple[Event, ...] = ()
    liquidity: LiquidityProfile = field(default_factory=lambda: LiquidityProfile({}))
    dependencies: tuple[DependencyEdge, ...] = ()
    classification: AssetClassification = field(
        default_factory=lambda: AssetClassification({}, {})
    )
    warnings: tuple[str, ...] = ()

    def _index(self, name: str, build):
        cache = self.__dict__.get("_cache")
        if cache is None:
            cache = {}
            object.__setattr__(self, "_cache", cache)
        if name not in cache:
            cache[name] = build()
        return cache[name]

    # -- entity universe -------------------------------------------------

    def tvl_entities(self, kind: EntityKind | None = None) -> list[EntityId]:
        seen = {obs.entity for obs in self.tvl}
        if kind is not None:
            seen = {e for e in seen if e.kind is kind}
        return sorted(seen, key=lambda e: e.sort_key)

    def curators(self) -> list[EntityId]:
        return sorted(self._positions_by_curator(), key=lambda e: e.sort_key)

    # -- tvl -------------------------------------------------------------

    def _tvl_by_entity(self) -> dict[EntityId, dict[date, dict[str, Decimal]]]:
        def build():
            out: dict[EntityId, dict[date, dict[str, Decimal]]] = {}
            for obs in self.tvl:
                days = out.setdefault(obs.entity, {})
                chains = days.setdefault(obs.date, {})
                chains[obs.chain] = chains.get(obs.chain, Decimal(0)) + obs.tvl_usd
            return out

        return self._index("tvl_by_entity", build)

    def tvl_series(self, entity: EntityId, chain: str | None = None) -> TvlSeries:
        """TVL series for an entity, summed across chains unless one is given."""
        days = self._tvl_by_entity().get(entity, {})
        pts = []
        for d in sorted(days):
            chains = days[d]
            if chain is None:
                pts.append((d, sum(chains.values(), Decimal(0))))
            elif chain in chains:
                pts.append((d, chains[chain]))
        return TvlSeries(entity, tuple(pts))

    def chains_of(self, entity: EntityId, on: date) -> dict[str, Decimal]:
        chains = self._tvl_by_entity().get(entity, {}).get(on, {})
        return dict(sorted(chains.items()))

    # -- positions -------------------------------------------------------

    def _positions_by_date(self) -> dict[date, tuple[PositionSnapshot, ...]]:
        def build():
            out: dict[date, list[PositionSnapshot]] = {}
            for p in self.positions:
                out.setdefault(p.date, []).append(p)
            return {d: tuple(rows) for d, rows in out.items()}

        return self._index("positions_by_date", build)

    def _positions_by_curator(self) -> dict[EntityId, tuple[PositionSnapshot, ...]]:
        def build():
            out: dict[EntityId, list[PositionSnapshot]] = {}
            for p in self.positions:
                out.setdefault(p.curator, []).append(p)
            return {c: tuple(rows) for c, rows in out.items()}

        return self._index("positions_by_curator", build)

    def position_dates(self) -> list[date]:
        return sorted(self._positions_by_date())

    def positions_for(
        self,
        curator: EntityId | None = None,
        on: date | None = None,
        vault: str | None = None,
    ) -> list[PositionSnapshot]:
        if curator is not None and on is not None:
            def build():
                out: dict[tuple[date, EntityId], list[PositionSnapshot]] = {}
                for p in self.positions:
                    out.setdefault((p.date, p.curator), []).append(p)
                return {k: tuple(rows) for k, rows in out.items()}

            rows = self._index("positions_by_date_curator", build).get((on, curator), ())
        elif curator is not None:
            rows = self._positions_by_curator().get(curator, ())
        elif on is not None:
            rows = self._positions_by_date().get(on, ())
        else:
            rows = self.positions
        return [
            p
            for p in rows
            if (curator is None or p.curator == curator)
            and (on is None or p.date == on)
            and (vault is None or p.vault == vault)
        ]

    def pool_totals(self, curator: EntityId, on: date) -> dict[str, Decimal]:
        out: dict[str, Decimal] = {}
        for p in self.positions_for(curator, on):
            out[p.pool] = out.get(p.pool, Decimal(0)) + p.amount_usd
        return dict(sorted(out.items()))

    def curator_tvl_series(self, curator: EntityId) -> TvlSeries:
        """Curator balance-sheet TVL: daily sum of all position amounts.

        If the curator also appears in the TVL table, that table wins and the
        positions-derived series is not consulted.
        """
        explicit = self.tvl_series(curator)
        if explicit.points:
            return explicit
        per_day: dict[date, Decimal] = {}
        for p in self._positions_by_curator().get(curator, ()):
            per_day[p.date] = per_day.get(p.date, Decimal(0)) + p.amount_usd
        return TvlSeries(curator, tuple(sorted(per_day.items())))

    # -- other tables ----------------------------------------------------

    def loans_for(self, entity: EntityId) -> dict[date, Decimal]:
        def build():
            out: dict[EntityId, dict[date, Decimal]] = {}
            for o in self.loans:
                out.setdefault(o.entity, {})[o.date] = o.active_loans_usd
            return out

        return dict(self._index("loans_by_entity", build).get(entity, {}))

    def fees_for(self, entity: EntityId) -> list[FeeRecord]:
        def build():
            out: dict[EntityId, list[FeeRecord]] = {}
            for f in self.fees:
                out.setdefault(f.entity, []).append(f)
            return {e: tuple(rows) for e, rows in out.items()}

        return list(self._index("fees_by_entity", build).get(entity, ()))

    def events_for(self, entity: EntityId, kind: EventKind | None = None) -> list[Event]:
        def build():
            out: dict[EntityId, list[Event]] = {}
            for e in self.events:
                out.setdefault(e.entity, []).append(e)
            return {e: tuple(rows) for e, rows in out.items()}

        rows = self._index("events_by_entity", build).get(entity, ())
        return [e for e in rows if kind is None or e.kind is kind]

    def last_date(self) -> date:
        dates = [o.date for o in self.tvl] + [p.date for p in self.positions]
        if not dates:
            raise UndefinedMetricError("dataset has no dated TVL or position rows")
        return max(dates)


@dataclass(frozen=True)
class AlignedSeries:
    series: TvlSeries
    policy: str
    gap_count: int


def align_calendar(series: TvlSeries, policy: str = "forward_fill") -> AlignedSeries:
    """Align a TVL series to a daily calendar.

    ``forward_fill`` emits one point per calendar day between the first and
    last observation, carrying the last observed value; ``drop_gaps`` keeps
    the series as-is but reports how many days are missing.
    """
    if not series.points:
        raise ValueError("series must be nonempty")
    if policy not in ("forward_fill", "drop_gaps"):
        raise ValueError(f"unknown alignment policy {policy!r}")
    first, last = series.points[0][0], series.points[-1][0]
    span = (last - first).days + 1
    gaps = span - len(series.points)
    if policy == "drop_gaps":
        return AlignedSeries(series, policy, gaps)
    have = dict(series.points)
    pts = []
    value = series.points[0][1]
    d = first
    while d <= last:
        value = have.get(d, value)
        pts.append((d, value))
        d += timedelta(days=1)
    return AlignedSeries(TvlSeries(series.entity, tuple(pts)), policy, gaps)


def market_share(
    series_set: Iterable[TvlSeries], on: date
) -> dict[EntityId, float]:
    """Share of total TVL per entity on a date. Shares sum to one."""
    totals: dict[EntityId, Decimal] = {}
    for s in series_set:
        for d, v in s.points:
            if d == on:
                totals[s.entity] = totals.get(s.entity, Decimal(0)) + v
    grand = sum(totals.values(), Decimal(0))
    if grand <= 0:
        raise UndefinedMetricError(f"total TVL on {on} is zero; shares undefined")
    return {
        e: float(v / grand)
        for e, v in sorted(totals.items(), key=lambda kv: kv[0].sort_key)
    }


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class _RowReader:
    """Wraps csv.DictReader with issue collection and typed field parsing."""

    def __init__(self, path: Path, table: str, issues: list[ParseIssue]):
        self.path = path
        self.table = table
        self.issues = issues

    def report(self, line: int | None, column: str | None, message: str) -> None:
        self.issues.append(ParseIssue(self.path.name, line, column, message))

    def rows(self):
        expected = _CSV_HEADERS[self.table]
        with open(self.path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            if header is None:
                self.report(1, None, "empty file, header row required")
                return
            if [h.strip() for h in header] != expected:
                self.report(1, None, f"header must be {','.join(expected)}, got {','.join(header)}")
                return
            for row in reader:
                if None in row.values() or None in row:
                    self.report(reader.line_num, None, "wrong number of fields")
                    continue
                yield reader.line_num, row


class _ColumnError(Exception):
    """Field-level parse failure, tagged with the offending column."""

    def __init__(self, column: str, message: str):
        self.column = column
        super().__init__(message)


def _col(column: str, fn, *args):
    try:
        return fn(*args)
    except (ValueError, InvalidOperation, json.JSONDecodeError) as exc:
        raise _ColumnError(column, str(exc)) from None


def _parse_decimal(text: str) -> Decimal:
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise InvalidOperation(f"not a decimal number: {text!r}") from None
    if value.is_nan():
        raise InvalidOperation("NaN is not a valid amount")
    if value.is_infinite():
        raise InvalidOperation("infinite amounts are not allowed")
    return value


def _parse_date(text: str) -> date:
    text = text.strip()
    if len(text) != 10:
        # rejects intraday timestamps for daily panels
        raise ValueError(f"expected calendar day YYYY-MM-DD, got {text!r}")
    return date.fromisoformat(text)


def _parse_kind(text: str) -> EntityKind:
    try:
        return EntityKind(text.strip())
    except ValueError:
        raise ValueError(f"unknown entity kind {text!r}") from None


def _parse_timestamp(text: str) -> int:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _entity(row: Mapping[str, str]) -> EntityId:
    return EntityId(_parse_kind(row["entity_kind"]), row["entity_name"].strip())


def parse_dataset(paths: Iterable[str | Path], schema: str = SCHEMA_V1) -> Dataset:
    """Parse and validate a snapshot dataset from CSV/JSON files.

    Files are recognized by stem (``tvl``, ``positions``, ``loans``, ``fees``,
    ``events``, ``liquidity``, ``deps``, ``classification``); several files of
    the same table may be supplied and are merged. The result is independent
    of row order and file order. Raises :class:`DatasetError` listing every
    problem found.
    """
    if schema != SCHEMA_V1:
        raise ValueError(f"unknown dataset schema {schema!r}")

    issues: list[ParseIssue] = []
    warnings: list[str] = []
    by_table: dict[str, list[Path]] = {}
    for raw in sorted(Path(p) for p in paths):
        stem = raw.stem
        if stem in _CSV_HEADERS or stem == "classification":
            by_table.setdefault(stem, []).append(raw)
        else:
            issues.append(ParseIssue(raw.name, None, None, "unrecognized dataset file"))
    if issues:
        raise DatasetError(issues)

    tvl: dict[tuple, TvlObservation] = {}
    positions: dict[tuple, PositionSnapshot] = {}
    loans: dict[tuple, LoanObservation] = {}
    fees: dict[tuple, FeeRecord] = {}
    events: list[Event] = []
    liquidity: dict[tuple[str, int], Decimal] = {}
    deps: dict[tuple, DependencyEdge] = {}

    def _insert(store: dict, key: tuple, record, reader: _RowReader, line: int) -> None:
        if key in store:
            reader.report(line, None, f"duplicate key {key}")
        else:
            store[key] = record

    for path in by_table.get("tvl", []):
        r = _RowReader(path, "tvl", issues)
        for line, row in r.rows():
            try:
                obs = TvlObservation(
                    _col("entity_kind", _entity, row),
                    row["chain"].strip(),
                    _col("date", _parse_date, row["date"]),
                    _col("tvl_usd", _parse_decimal, row["tvl_usd"]),
                )
            except _ColumnError as exc:
                r.report(line, exc.column, str(exc))
                continue
            except ValueError as exc:
                r.report(line, None, str(exc))
                continue
            _insert(tvl, (obs.entity.sort_key, obs.chain, obs.date), obs, r, line)

    for path in by_table.get("positions", []):
        r = _RowReader(path, "positions", issues)
        for line, row in r.rows():
            try:
                pos = PositionSnapshot(
                    _col("date", _parse_date, row["date"]),
                    _col("curator", EntityId, EntityKind.curator, row["curator"].strip()),
                    row["vault"].strip(),
                    row["pool"].strip(),
                    row["chain"].strip(),
                    row["asset"].strip(),
                    _col("amount_usd", _parse_decimal, row["amount_usd"]),
                )
            except _ColumnError as exc:
                r.report(line, exc.column, str(exc))
                continue
            except ValueError as exc:
                r.report(line, None, str(exc))
                continue
            _insert(positions, pos.key, pos, r, line)

    for path in by_table.get("loans", []):
        r = _RowReader(path, "loans", issues)
        for line, row in r.rows():
            try:
                obs = LoanObservation(
                    _col("entity_kind", _entity, row),
                    _col("date", _parse_date, row["date"]),
                    _col("active_loans_usd", _parse_decimal, row["active_loans_usd"]),
                )
            except _ColumnError as exc:
                r.report(line, exc.column, str(exc))
                continue
            except ValueError as exc:
                r.report(line, None, str(exc))
                continue
            _insert(loans, (obs.entity.sort_key, obs.date), obs, r, line)

    for path in by_table.get("fees", []):
        r = _RowReader(path, "fees", issues)
        for line, row in r.rows():
            try:
                rec = FeeRecord(
                    _col("entity_kind", _entity, row),
                    _col("date", _parse_date, row["date"]),
                    _col("gross_fees_usd", _parse_decimal, row["gross_fees_usd"]),
                    _col("retained_revenue_usd", _parse_decimal, row["retained_revenue_usd"]),
                )
            except _ColumnError as exc:
                r.report(line, exc.column, str(exc))
                continue
            except ValueError as exc:
                r.report(line, None, str(exc))
                continue
            _insert(fees, (rec.entity.sort_key, rec.date), rec, r, line)

    def _parse_payload(text: str) -> dict[str, str]:
        payload = json.loads(text) if text.strip() else {}
        if not isinstance(payload, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in payload.items()
        ):
            raise ValueError("payload must be a JSON object of strings")
        return payload

    for path in by_table.get("events", []):
        r = _RowReader(path, "events", issues)
        for line, row in r.rows():
            try:
                ev = Event(
                    _col("timestamp", _parse_timestamp, row["timestamp"]),
                    _col("entity_kind", _entity, row),
                    _col("kind", EventKind, row["kind"].strip()),
                    _col("payload", _parse_payload, row["payload"]),
                )
            except _ColumnError as exc:
                r.report(line, exc.column, str(exc))
                continue
            except ValueError as exc:
                r.report(line, None, str(exc))
                continue
            events.append(ev)

    def _parse_depth(text: str) -> Decimal:
        if text.strip().lower() == "inf":
            return UNBOUNDED
        depth = _parse_decimal(text)
        if depth < 0:
            raise ValueError("depth_usd must be nonnegative")
        return depth

    def _parse_bps(text: str) -> int:
        bps = int(text)
        if bps <= 0:
            raise ValueError("slippage_bps must be positive")
        return bps

    for path in by_table.get("liquidity", []):
        r = _RowReader(path, "liquidity", issues)
        for line, row in r.rows():
            try:
                asset = row["asset"].strip()
                bps = _col("slippage_bps", _parse_bps, row["slippage_bps"])
                depth = _col("depth_usd", _parse_depth, row["depth_usd"])
            except _ColumnError as exc:
                r.report(line, exc.column, str(exc))
                continue
            if (asset, bps) in liquidity:
                r.report(line, None, f"duplicate key {(asset, bps)}")
            else:
                liquidity[(asset, bps)] = depth

    for path in by_table.get("deps", []):
        r = _RowReader(path, "deps", issues)
        for line, row in r.rows():
            try:
                edge = DependencyEdge(
                    row["from_vault"].strip(),
                    row["to_target"].strip(),
                    _col("kind", DependencyKind, row["kind"].strip()),
                )
            except _ColumnError as exc:
                r.report(line, exc.column, str(exc))
                continue
            except ValueError as exc:
                r.report(line, None, str(exc))
                continue
            _insert(deps, (edge.from_vault, edge.to_target, edge.kind.value), edge, r, line)

    classification = AssetClassification({}, {})
    for path in by_table.get("classification", []):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            assets = doc.get("assets", {})
            class_of, family_of, issuer_of = {}, {}, {}
            for asset, info in assets.items():
                class_of[asset] = AssetClass(info["class"])
                family_of[asset] = info["family"]
                if "issuer" in info:
                    issuer_of[asset] = info["issuer"]
            classification = AssetClassification(
                class_of, family_of, issuer_of, doc.get("default_policy", "strict")
            )
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            issues.append(ParseIssue(path.name, None, None, f"bad classification file: {exc}"))

    # every referenced asset must resolve under the configured policy
    referenced = sorted({p.asset for p in positions.values()})
    for asset in referenced:
        if asset not in classification.class_of:
            if classification.default_policy == "strict":
                issues.append(
                    ParseIssue(
                        "classification.json",
                        None,
                        None,
                        f"asset {asset!r} referenced by positions is not classified",
                    )
                )
            else:
                warnings.append(f"asset {asset!r} defaulted to class=volatile, family={asset!r}")

    try:
        profile = LiquidityProfile(liquidity)
    except ValueError as exc:
        issues.append(ParseIssue("liquidity.csv", None, None, str(exc)))
        profile = LiquidityProfile({})

    if issues:
        raise DatasetError(issues)

    return Dataset(
        tvl=tuple(sorted(tvl.values(), key=lambda o: (o.entity.sort_key, o.chain, o.date))),
        positions=tuple(sorted(positions.values(), key=lambda p: p.key + (p.chain,))),
        loans=tuple(sorted(loans.values(), key=lambda o: (o.entity.sort_key, o.date))),
        fees=tuple(sorted(fees.values(), key=lambda f: (f.entity.sort_key, f.date))),
        events=tuple(sorted(events, key=lambda e: e.sort_key)),
        liquidity=profile,
        dependencies=tuple(sorted(deps.values(), key=lambda e: (e.from_vault, e.to_target, e.kind.value))),
        classification=classification,
        warnings=tuple(warnings),
    )


def load_dataset(directory: str | Path, schema: str = SCHEMA_V1) -> Dataset:
    """Parse every recognized dataset file found directly in ``directory``."""
    directory = Path(directory)
    known = set(_CSV_HEADERS) | {"classification"}
    paths = [p for p in sorted(directory.iterdir()) if p.is_file() and p.stem in known]
    if not paths:
        raise DatasetError([ParseIssue(str(directory), None, None, "no dataset files found")])
    return parse_dataset(paths, schema)


# ---------------------------------------------------------------------------
# Serialization (canonical, for round-trips and fixtures)
# ---------------------------------------------------------------------------


def _dec(value: Decimal) -> str:
    if value == UNBOUNDED:
        return "inf"
    return str(value)


def write_dataset(dataset: Dataset, directory: str | Path) -> list[Path]:
    """Write a dataset back to canonical CSV/JSON files. Inverse of parsing."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def _csv(name: str, rows: list[list[str]]) -> None:
        path = directory / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_CSV_HEADERS[name])
            writer.writerows(rows)
        written.append(path)

    if dataset.tvl:
        _csv(
            "tvl",
            [
                [o.entity.kind.value, o.entity.name, o.chain, o.date.isoformat(), _dec(o.tvl_usd)]
                for o in dataset.tvl
            ],
        )
    if dataset.positions:
        _csv(
            "positions",
            [
                [p.date.isoformat(), p.curator.name, p.vault, p.pool, p.chain, p.asset, _dec(p.amount_usd)]
                for p in dataset.positions
            ],
        )
    if dataset.loans:
        _csv(
            "loans",
            [
                [o.entity.kind.value, o.entity.name, o.date.isoformat(), _dec(o.active_loans_usd)]
                for o in dataset.loans
            ],
        )
    if dataset.fees:
        _csv(
            "fees",
            [
                [
                    f.entity.kind.value,
                    f.entity.name,
                    f.date.isoformat(),
                    _dec(f.gross_fees_usd),
                    _dec(f.retained_revenue_usd),
                ]
                for f in dataset.fees
            ],
        )
    if dataset.events:
        _csv(
            "events",
            [
                [
                    datetime.fromtimestamp(e.timestamp, tz=timezone.utc).isoformat(),
                    e.entity.kind.value,
                    e.entity.name,
                    e.kind.value,
                    json.dumps(dict(sorted(e.payload.items()))),
                ]
                for e in dataset.events
            ],
        )
    if dataset.liquidity.depth_at_slippage:
        _csv(
            "liquidity",
            [
                [asset, str(bps), _dec(depth)]
                for (asset, bps), depth in sorted(dataset.liquidity.depth_at_slippage.items())
            ],
        )
    if dataset.dependencies:
        _csv(
            "deps",
            [[e.from_vault, e.to_target, e.kind.value] for e in dataset.dependencies],
        )
    if dataset.classification.class_of:
        doc = {
            "assets": {
                asset: {
                    "class": dataset.classification.class_of[asset].value,
                    "family": dataset.classification.family_of[asset],
                    **(
                        {"issuer": dataset.classification.issuer_of[asset]}
                        if asset in dataset.classification.issuer_of
                        else {}
                    ),
                }
                for asset in sorted(dataset.classification.class_of)
            },
            "default_policy": dataset.classification.default_policy,
        }
        path = directory / "classification.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        written.append(path)
    return written
