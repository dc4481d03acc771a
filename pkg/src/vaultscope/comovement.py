"""Return construction, correlation matrices, drawdowns, and conditional
lower-tail dependence.

Returns are daily log changes of TVL over consecutive calendar days; pairs
spanning a gap or touching a nonpositive TVL are skipped, not errors. All
pairwise statistics are Pearson correlations over pairwise-complete
observations and are exactly symmetric in their two arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Sequence

import numpy as np

from vaultscope.data import EntityId, TvlSeries, UndefinedMetricError

__all__ = [
    "CorrelationMatrix",
    "DateWindow",
    "ReturnSeries",
    "correlation_matrix",
    "drawdown_correlation",
    "drawdown_matrix",
    "drawdown_series",
    "log_returns",
    "split_subsamples",
    "tail_dependence",
    "tail_matrix",
    "tail_quantile",
]

TAIL_MODES = ("union", "one_sided", "intersection")


@dataclass(frozen=True)
class DateWindow:
    start: date
    end: date

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"empty window: {self.start}..{self.end}")

    def __contains__(self, d: date) -> bool:
        return self.start <= d <= self.end

    @property
    def days(self) -> int:
        return (self.end - self.start).days + 1


@dataclass(frozen=True)
class ReturnSeries:
    entity: EntityId
    points: tuple[tuple[date, float], ...]
    skipped_pairs: int = 0  # gap-spanning or nonpositive-TVL pairs

    def in_window(self, window: DateWindow | None) -> dict[date, float]:
        if window is None:
            return dict(self.points)
        return {d: r for d, r in self.points if d in window}


def log_returns(series: TvlSeries, mode: str = "log") -> ReturnSeries:
    """Daily returns over consecutive calendar days.

    ``log`` gives ln(v_t / v_{t-1}); ``simple`` gives v_t / v_{t-1} - 1.
    Pairs across a calendar gap are skipped (use a forward-filled series if
    gap-bridging is wanted), as are pairs with a zero TVL on either side.
    """
    if mode not in ("log", "simple"):
        raise ValueError(f"unknown return mode {mode!r}")
    if len(series.points) < 2:
        raise UndefinedMetricError("need at least 2 points to form returns")
    pts: list[tuple[date, float]] = []
    skipped = 0
    for (d0, v0), (d1, v1) in zip(series.points, series.points[1:]):
        if (d1 - d0).days != 1:
            skipped += 1
            continue
        if v0 <= 0 or v1 <= 0:
            skipped += 1
            continue
        ratio = float(v1) / float(v0)
        pts.append((d1, math.log(ratio) if mode == "log" else ratio - 1.0))
    return ReturnSeries(series.entity, tuple(pts), skipped)


def _pearson(x: Sequence[float], y: Sequence[float]) -> float:
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    n = xa.size
    if n < 2:
        raise UndefinedMetricError("need at least 2 observations for correlation")
    xd = xa - xa.mean()
    yd = ya - ya.mean()
    vx = float(xd @ xd)
    vy = float(yd @ yd)
    if vx == 0.0 or vy == 0.0:
        raise UndefinedMetricError("zero variance; correlation undefined")
    r = float(xd @ yd) / math.sqrt(vx * vy)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class CorrelationMatrix:
    entities: tuple[EntityId, ...]
    values: np.ndarray  # square, nan where undefined
    n_obs: np.ndarray  # pairwise overlap counts
    undefined: tuple[tuple[EntityId, EntityId], ...]
    min_obs: int

    def value(self, a: EntityId, b: EntityId) -> float:
        i, j = self.entities.index(a), self.entities.index(b)
        return float(self.values[i, j])


def correlation_matrix(
    returns_set: Iterable[ReturnSeries],
    window: DateWindow | None = None,
    min_obs: int = 30,
) -> CorrelationMatrix:
    """Pairwise-complete Pearson correlation over a date window.

    Pairs with fewer than ``min_obs`` overlapping days are flagged undefined
    (nan) rather than reported. The diagonal is exactly 1 for entities with
    any usable returns.
    """
    if min_obs < 3:
        raise ValueError("min_obs must be at least 3")
    series = sorted(returns_set, key=lambda s: s.entity.sort_key)
    entities = tuple(s.entity for s in series)
    if len(set(entities)) != len(entities):
        raise ValueError("duplicate entities in returns set")
    maps = [s.in_window(window) for s in series]
    n = len(series)
    values = np.full((n, n), np.nan)
    counts = np.zeros((n, n), dtype=int)
    undefined: list[tuple[EntityId, EntityId]] = []
    for i in range(n):
        counts[i, i] = len(maps[i])
        if maps[i]:
            values[i, i] = 1.0
        else:
            undefined.append((entities[i], entities[i]))
    for i in range(n):
        for j in range(i + 1, n):
            shared = sorted(maps[i].keys() & maps[j].keys())
            counts[i, j] = counts[j, i] = len(shared)
            if len(shared) < min_obs:
                undefined.append((entities[i], entities[j]))
                continue
            try:
                r = _pearson([maps[i][d] for d in shared], [maps[j][d] for d in shared])
            except UndefinedMetricError:
                undefined.append((entities[i], entities[j]))
                continue
            values[i, j] = values[j, i] = r
    return CorrelationMatrix(entities, values, counts, tuple(undefined), min_obs)


def split_subsamples(dates: Sequence[date], split_date: date | None = None) -> tuple[DateWindow, DateWindow]:
    """Split a date range into [first, split] and (split, last].

    With no explicit split date, the midpoint by day count is used, giving
    two windows of (near) equal length.
    """
    if not dates:
        raise ValueError("no dates to split")
    first, last = min(dates), max(dates)
    if split_date is None:
        split_date = first + timedelta(days=(last - first).days // 2)
    if not (first <= split_date < last):
        raise ValueError(
            f"split date {split_date} must lie inside [{first}, {last}) so both windows are nonempty"
        )
    return DateWindow(first, split_date), DateWindow(split_date + timedelta(days=1), last)


def drawdown_series(series: TvlSeries) -> tuple[tuple[date, float], ...]:
    """Fractional distance below the running peak, in [0, 1].

    Zero exactly at running peaks. TVL must be strictly positive; feed a
    forward-filled series so the running peak tracks a contiguous path.
    """
    if not series.points:
        raise UndefinedMetricError("empty series; drawdown undefined")
    out: list[tuple[date, float]] = []
    peak = None
    for d, v in series.points:
        if v <= 0:
            raise UndefinedMetricError(f"nonpositive TVL on {d}; drawdown undefined")
        peak = v if peak is None or v > peak else peak
        out.append((d, 1.0 - float(v) / float(peak)))
    return tuple(out)


def drawdown_correlation(
    series_i: TvlSeries,
    series_j: TvlSeries,
    window: DateWindow | None = None,
    min_obs: int = 3,
) -> float:
    """Pearson correlation of two drawdown paths over their shared dates."""
    di = dict(drawdown_series(series_i))
    dj = dict(drawdown_series(series_j))
    shared = sorted(
        d for d in di.keys() & dj.keys() if window is None or d in window
    )
    if len(shared) < min_obs:
        raise UndefinedMetricError(
            f"only {len(shared)} overlapping days, fewer than min_obs={min_obs}"
        )
    return _pearson([di[d] for d in shared], [dj[d] for d in shared])


def drawdown_matrix(
    series_set: Iterable[TvlSeries],
    window: DateWindow | None = None,
    min_obs: int = 3,
) -> CorrelationMatrix:
    """Pairwise drawdown correlations; undefined pairs flagged, not dropped."""
    series = sorted(series_set, key=lambda s: s.entity.sort_key)
    entities = tuple(s.entity for s in series)
    n = len(series)
    values = np.full((n, n), np.nan)
    counts = np.zeros((n, n), dtype=int)
    undefined: list[tuple[EntityId, EntityId]] = []
    paths: list[dict[date, float] | None] = []
    for s in series:
        try:
            paths.append(dict(drawdown_series(s)))
        except UndefinedMetricError:
            paths.append(None)
    for i in range(n):
        if paths[i] is None:
            undefined.append((entities[i], entities[i]))
            continue
        values[i, i] = 1.0
        counts[i, i] = len(paths[i])
    for i in range(n):
        for j in range(i + 1, n):
            if paths[i] is None or paths[j] is None:
                undefined.append((entities[i], entities[j]))
                continue
            shared = sorted(
                d for d in paths[i].keys() & paths[j].keys() if window is None or d in window
            )
            counts[i, j] = counts[j, i] = len(shared)
            if len(shared) < min_obs:
                undefined.append((entities[i], entities[j]))
                continue
            try:
                r = _pearson([paths[i][d] for d in shared], [paths[j][d] for d in shared])
            except UndefinedMetricError:
                undefined.append((entities[i], entities[j]))
                continue
            values[i, j] = values[j, i] = r
    return CorrelationMatrix(entities, values, counts, tuple(undefined), min_obs)


def tail_matrix(
    returns_set: Iterable[ReturnSeries],
    q: float = 0.10,
    window: DateWindow | None = None,
    mode: str = "union",
    min_overlap: int = 20,
) -> CorrelationMatrix:
    """Pairwise conditional lower-tail correlations; diagonal is 1."""
    series = sorted(returns_set, key=lambda s: s.entity.sort_key)
    entities = tuple(s.entity for s in series)
    n = len(series)
    values = np.full((n, n), np.nan)
    counts = np.zeros((n, n), dtype=int)
    undefined: list[tuple[EntityId, EntityId]] = []
    maps = [s.in_window(window) for s in series]
    for i in range(n):
        counts[i, i] = len(maps[i])
        if maps[i]:
            values[i, i] = 1.0
        else:
            undefined.append((entities[i], entities[i]))
    for i in range(n):
        for j in range(i + 1, n):
            counts[i, j] = counts[j, i] = len(maps[i].keys() & maps[j].keys())
            try:
                values[i, j] = tail_dependence(series[i], series[j], q, window, mode, min_overlap)
                # one_sided conditions on the row entity's tail, so the
                # transpose entry must be computed, not mirrored
                if mode == "one_sided":
                    values[j, i] = tail_dependence(series[j], series[i], q, window, mode, min_overlap)
                else:
                    values[j, i] = values[i, j]
            except UndefinedMetricError:
                values[i, j] = values[j, i] = np.nan
                undefined.append((entities[i], entities[j]))
    return CorrelationMatrix(entities, values, counts, tuple(undefined), min_overlap)


def tail_quantile(values: Sequence[float], q: float) -> float:
    """Inclusive nearest-rank empirical quantile: k-th smallest, k = ceil(q*n)."""
    if not 0 < q <= 1:
        raise ValueError("quantile fraction must lie in (0, 1]")
    ordered = sorted(values)
    if not ordered:
        raise UndefinedMetricError("no observations; quantile undefined")
    k = math.ceil(q * len(ordered))
    return ordered[k - 1]


def tail_dependence(
    returns_i: ReturnSeries,
    returns_j: ReturnSeries,
    q: float = 0.10,
    window: DateWindow | None = None,
    mode: str = "union",
    min_overlap: int = 20,
) -> float:
    """Correlation of two return series restricted to lower-tail days.

    A day enters the condition set when a return lies at or below its own
    empirical ``q``-quantile, computed over the overlapping window:
    ``union`` takes days where either series is in its tail (symmetric,
    the default), ``one_sided`` conditions on ``returns_i`` only, and
    ``intersection`` requires both.
    """
    if mode not in TAIL_MODES:
        raise ValueError(f"tail mode must be one of {TAIL_MODES}")
    ri = returns_i.in_window(window)
    rj = returns_j.in_window(window)
    shared = sorted(ri.keys() & rj.keys())
    if len(shared) < min_overlap:
        raise UndefinedMetricError(
            f"only {len(shared)} overlapping observations, need {min_overlap}"
        )
    xi = [ri[d] for d in shared]
    xj = [rj[d] for d in shared]
    qi = tail_quantile(xi, q)
    qj = tail_quantile(xj, q)
    if mode == "union":
        keep = [k for k in range(len(shared)) if xi[k] <= qi or xj[k] <= qj]
    elif mode == "one_sided":
        keep = [k for k in range(len(shared)) if xi[k] <= qi]
    else:
        keep = [k for k in range(len(shared)) if xi[k] <= qi and xj[k] <= qj]
    if len(keep) < 3:
        raise UndefinedMetricError(
            f"condition set has {len(keep)} days, need at least 3"
        )
    return _pearson([xi[k] for k in keep], [xj[k] for k in keep])
