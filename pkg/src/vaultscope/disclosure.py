"""Transparency disclosure bundle: issuer concentration, stress liquidity
coverage, attestation cadence, parameter reactivity, rehypothecation map,
and fairness metrics, emitted as a deterministic JSON document.

Missing inputs never silently drop a section; they yield an explicit
"not_disclosed" marker with the reason recorded in metadata.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from decimal import Decimal
from typing import Iterable, Mapping, Sequence

from vaultscope.concentration import issuer_concentration
from vaultscope.data import (
    AssetClassification,
    Dataset,
    DependencyEdge,
    EntityId,
    Event,
    EventKind,
    LiquidityProfile,
    UNBOUNDED,
    UndefinedMetricError,
    UnknownAssetError,
)

__all__ = [
    "Cadence",
    "FairnessReport",
    "Reactivity",
    "RehypothecationMap",
    "StressScenario",
    "attestation_cadence",
    "emit_disclosure_bundle",
    "fairness_metrics",
    "liquidity_coverage",
    "parameter_reactivity",
    "rehypothecation_map",
    "render_bundle",
]

NOT_DISCLOSED = "not_disclosed"

DEFAULT_MATCH_WINDOW_SECONDS = 7 * 86_400
DEFAULT_MIN_COHORT_N = 10


@dataclass(frozen=True)
class StressScenario:
    """Named unwind scenario: a slippage budget plus optional per-class
    multiplicative depth haircuts in [0, 1]."""

    name: str
    slippage_bps: int = 100
    haircuts: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.slippage_bps <= 0:
            raise ValueError("slippage_bps must be positive")
        for cls, h in self.haircuts.items():
            if not 0 <= h <= 1:
                raise ValueError(f"haircut for {cls!r} must lie in [0, 1], got {h}")


def liquidity_coverage(
    amounts_by_asset: Mapping[str, Decimal | float],
    profile: LiquidityProfile,
    scenario: StressScenario,
    classification: AssetClassification | None = None,
    strict: bool = True,
) -> float:
    """Fraction of a book unwindable within the scenario's depth limits.

    Each asset contributes min(position, haircut * depth at the scenario's
    slippage budget); unbounded depth covers the position fully. Assets
    absent from the profile raise under strict policy, otherwise count as
    zero depth.
    """
    amounts = {a: float(v) for a, v in amounts_by_asset.items() if float(v) > 0}
    total = sum(amounts[a] for a in sorted(amounts))
    if total <= 0:
        raise UndefinedMetricError("no positive positions; coverage undefined")
    if scenario.haircuts and classification is None:
        raise ValueError("per-class haircuts require a classification")
    covered = 0.0
    for asset in sorted(amounts):
        depth = profile.depth_at(asset, scenario.slippage_bps)
        if depth is None:
            if strict:
                raise UnknownAssetError(
                    f"asset {asset!r} has no depth entry in the liquidity profile"
                )
            depth = Decimal(0)
        haircut = 1.0
        if scenario.haircuts:
            cls = classification.class_for(asset)
            haircut = scenario.haircuts.get(cls.value, 1.0)
        if depth == UNBOUNDED:
            covered += amounts[asset] if haircut > 0 else 0.0
        else:
            covered += min(amounts[asset], haircut * float(depth))
    return min(covered / total, 1.0)


@dataclass(frozen=True)
class Reactivity:
    median_lag_seconds: float | None
    n_matched_shocks: int
    unmatched_shocks: tuple[int, ...]  # shock timestamps with no matched change


def parameter_reactivity(
    events: Iterable[Event], entity: EntityId, match_window_seconds: int
) -> Reactivity:
    """Median delay from a shock to the next parameter change.

    Each shock greedily claims the earliest still-unclaimed change strictly
    after it and within the window, so earlier shocks win contested changes.
    Unmatched shocks are surfaced, not absorbed.
    """
    shocks = sorted(
        e.timestamp for e in events if e.entity == entity and e.kind is EventKind.shock
    )
    if not shocks:
        raise UndefinedMetricError(f"no shock events for {entity}")
    changes = sorted(
        e.timestamp
        for e in events
        if e.entity == entity and e.kind is EventKind.param_change
    )
    used = [False] * len(changes)
    lags: list[int] = []
    unmatched: list[int] = []
    for shock in shocks:
        match = None
        for idx, change in enumerate(changes):
            if used[idx] or change <= shock:
                continue
            if change - shock <= match_window_seconds:
                match = idx
            break  # changes sorted: the first candidate is the earliest
        if match is None:
            unmatched.append(shock)
        else:
            used[match] = True
            lags.append(changes[match] - shock)
    median = float(statistics.median(lags)) if lags else None
    return Reactivity(median, len(lags), tuple(unmatched))


@dataclass(frozen=True)
class Cadence:
    median_gap_seconds: float | None
    max_staleness_seconds: int


def attestation_cadence(
    events: Iterable[Event], entity: EntityId, as_of_seconds: int
) -> Cadence:
    """Median gap between attestations and current staleness at ``as_of``."""
    stamps = sorted(
        e.timestamp
        for e in events
        if e.entity == entity and e.kind is EventKind.attestation
    )
    if not stamps:
        raise UndefinedMetricError(f"no attestation events for {entity}")
    gaps = [b - a for a, b in zip(stamps, stamps[1:])]
    median = float(statistics.median(gaps)) if gaps else None
    return Cadence(median, as_of_seconds - stamps[-1])


@dataclass(frozen=True)
class RehypothecationMap:
    adjacency: Mapping[str, tuple[str, ...]]
    max_depth: int
    cycles: tuple[tuple[str, ...], ...]
    edges: tuple[DependencyEdge, ...]


def _tarjan_sccs(nodes: Sequence[str], adj: Mapping[str, Sequence[str]]) -> dict[str, int]:
    """Strongly connected components; returns node -> component id."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comp: dict[str, int] = {}
    counter = [0]
    comp_count = [0]

    def strongconnect(v: str) -> None:
        # iterative Tarjan: (node, iterator state) frames
        work = [(v, iter(adj.get(v, ())))]
        index[v] = lowlink[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[node] = min(lowlink[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = comp_count[0]
                    if w == node:
                        break
                comp_count[0] += 1

    for v in nodes:
        if v not in index:
            strongconnect(v)
    return comp


def _elementary_cycles(nodes: Sequence[str], adj: Mapping[str, Sequence[str]]) -> list[tuple[str, ...]]:
    """All elementary cycles, each reported once starting at its smallest node."""
    cycles: list[tuple[str, ...]] = []
    ordered = sorted(nodes)

    def dfs(start: str, u: str, path: list[str], on_path: set[str]) -> None:
        for v in sorted(adj.get(u, ())):
            if v < start:
                continue  # cycles through smaller nodes are found from their own start
            if v == start:
                cycles.append(tuple(path))
            elif v not in on_path:
                on_path.add(v)
                path.append(v)
                dfs(start, v, path, on_path)
                path.pop()
                on_path.discard(v)

    for s in ordered:
        dfs(s, s, [s], {s})
    return sorted(cycles, key=lambda c: (len(c), c))


def rehypothecation_map(edges: Iterable[DependencyEdge]) -> RehypothecationMap:
    """Directed dependency graph with its longest acyclic depth and cycles.

    Depth is the longest path in the graph after condensing strongly
    connected components, counting edges that cross component boundaries;
    recursion inside a cycle shows up as a cycle finding instead of an
    infinite depth.
    """
    edges = tuple(sorted(set(edges), key=lambda e: (e.from_vault, e.to_target, e.kind.value)))
    adj: dict[str, list[str]] = {}
    nodes: set[str] = set()
    for e in edges:
        adj.setdefault(e.from_vault, [])
        if e.to_target not in adj[e.from_vault]:
            adj[e.from_vault].append(e.to_target)
        nodes.add(e.from_vault)
        nodes.add(e.to_target)
    for k in adj:
        adj[k].sort()
    ordered = sorted(nodes)

    cycles = _elementary_cycles(ordered, adj)

    comp = _tarjan_sccs(ordered, adj)
    condensed: dict[int, set[int]] = {}
    for u in ordered:
        for v in adj.get(u, ()):
            if comp[u] != comp[v]:
                condensed.setdefault(comp[u], set()).add(comp[v])
    depth: dict[int, int] = {}

    def longest_from(c: int) -> int:
        if c in depth:
            return depth[c]
        depth[c] = 0  # placeholder; condensation is acyclic so no revisit loops
        best = 0
        for nxt in condensed.get(c, ()):
            best = max(best, 1 + longest_from(nxt))
        depth[c] = best
        return best

    max_depth = max((longest_from(comp[u]) for u in ordered), default=0)
    adjacency = {u: tuple(adj.get(u, ())) for u in ordered if adj.get(u)}
    return RehypothecationMap(adjacency, max_depth, tuple(cycles), edges)


@dataclass(frozen=True)
class CohortStats:
    approvals: int
    rejections: int

    @property
    def approval_rate(self) -> float:
        return self.approvals / (self.approvals + self.rejections)


@dataclass(frozen=True)
class FairnessReport:
    cohorts: Mapping[str, CohortStats]
    disparity_ratio: float
    excluded_cohorts: tuple[str, ...]  # below the minimum decision count


def fairness_metrics(
    events: Iterable[Event],
    entity: EntityId | None = None,
    min_cohort_n: int = DEFAULT_MIN_COHORT_N,
) -> FairnessReport:
    """Per-cohort approval rates and their min/max disparity ratio.

    Cohorts with fewer than ``min_cohort_n`` decisions are excluded from
    both the report and the disparity ratio.
    """
    counts: dict[str, list[int]] = {}
    for e in events:
        if e.kind is not EventKind.credit_decision:
            continue
        if entity is not None and e.entity != entity:
            continue
        cohort = e.payload["cohort"]
        counts.setdefault(cohort, [0, 0])
        if e.payload["outcome"] == "approve":
            counts[cohort][0] += 1
        else:
            counts[cohort][1] += 1
    if not counts:
        raise UndefinedMetricError("no credit decision events")
    qualifying = {
        c: CohortStats(a, r) for c, (a, r) in sorted(counts.items()) if a + r >= min_cohort_n
    }
    excluded = tuple(sorted(set(counts) - set(qualifying)))
    if not qualifying:
        raise UndefinedMetricError(
            f"no cohort reaches {min_cohort_n} decisions; fairness undefined"
        )
    rates = [s.approval_rate for s in qualifying.values()]
    top = max(rates)
    disparity = 1.0 if top == 0 else min(rates) / top
    return FairnessReport(qualifying, disparity, excluded)


# ---------------------------------------------------------------------------
# Bundle assembly
# ---------------------------------------------------------------------------


def _round12(value):
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ValueError("non-finite value in disclosure document")
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {k: _round12(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round12(v) for v in value]
    return value


def render_bundle(doc: Mapping[str, object]) -> str:
    """Canonical JSON text: schema-ordered keys, 12 significant digits."""
    return json.dumps(_round12(dict(doc)), indent=2, ensure_ascii=False) + "\n"


def _end_of_day_seconds(d: date) -> int:
    return int(datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp()) + 86_400


def _reachable(roots: set[str], edges: Sequence[DependencyEdge]) -> list[DependencyEdge]:
    by_source: dict[str, list[DependencyEdge]] = {}
    for e in edges:
        by_source.setdefault(e.from_vault, []).append(e)
    seen = set(roots)
    frontier = sorted(roots)
    kept: list[DependencyEdge] = []
    while frontier:
        nxt: list[str] = []
        for u in frontier:
            for e in by_source.get(u, ()):
                kept.append(e)
                if e.to_target not in seen:
                    seen.add(e.to_target)
                    nxt.append(e.to_target)
        frontier = sorted(set(nxt))
    return kept


def emit_disclosure_bundle(
    dataset: Dataset,
    entity: EntityId,
    as_of: date | None = None,
    scenarios: Sequence[StressScenario] = (StressScenario("base", 100),),
    top_n: int = 5,
    match_window_seconds: int = DEFAULT_MATCH_WINDOW_SECONDS,
    min_cohort_n: int = DEFAULT_MIN_COHORT_N,
) -> dict:
    """Assemble the six-section transparency document for a curator or vault.

    Deterministic for a fixed dataset and parameters; sections whose inputs
    are missing carry the "not_disclosed" marker and a reason in metadata.
    """
    if as_of is None:
        as_of = dataset.last_date()
    if entity.kind.value == "curator":
        history = dataset.positions_for(curator=entity)
        positions = [p for p in history if p.date == as_of]
    elif entity.kind.value == "vault":
        history = dataset.positions_for(vault=entity.name)
        positions = [p for p in history if p.date == as_of]
    else:
        raise ValueError("disclosure bundles cover curator or vault entities")
    if not history and not dataset.events_for(entity):
        raise UndefinedMetricError(f"unknown entity {entity}: no positions or events")

    reasons: dict[str, str] = {}

    if positions:
        conc = issuer_concentration(
            positions, top_n=top_n, classification=dataset.classification
        )
        issuer_section: object = {
            "hhi": conc.hhi,
            "n_buckets": conc.n_buckets,
            "shares": conc.shares,
            "top": [{"issuer": i, "share": s} for i, s in conc.top],
        }
    else:
        issuer_section = NOT_DISCLOSED
        reasons["issuer_concentration"] = f"no positions on {as_of.isoformat()}"

    if positions and dataset.liquidity.depth_at_slippage:
        amounts: dict[str, Decimal] = {}
        for p in positions:
            amounts[p.asset] = amounts.get(p.asset, Decimal(0)) + p.amount_usd
        coverage = []
        for scenario in scenarios:
            try:
                value = liquidity_coverage(
                    amounts, dataset.liquidity, scenario, dataset.classification
                )
                coverage.append({"scenario": scenario.name, "value": value})
            except (UnknownAssetError, UndefinedMetricError) as exc:
                coverage.append({"scenario": scenario.name, "value": NOT_DISCLOSED})
                reasons[f"liquidity_coverage/{scenario.name}"] = str(exc)
        liquidity_section: object = coverage
    else:
        liquidity_section = NOT_DISCLOSED
        reasons["liquidity_coverage"] = (
            "no liquidity profile" if positions else f"no positions on {as_of.isoformat()}"
        )

    try:
        cadence = attestation_cadence(dataset.events, entity, _end_of_day_seconds(as_of))
        attestations = [
            e for e in dataset.events_for(entity, EventKind.attestation)
        ]
        # free-form signer identifier only; no scoring of signer quality
        signer = attestations[-1].payload.get("signer") if attestations else None
        attestation_section: object = {
            "median_gap_seconds": cadence.median_gap_seconds,
            "max_staleness_seconds": cadence.max_staleness_seconds,
            "signer": signer,
        }
    except UndefinedMetricError as exc:
        attestation_section = NOT_DISCLOSED
        reasons["attestation"] = str(exc)

    try:
        reactivity = parameter_reactivity(dataset.events, entity, match_window_seconds)
        reactivity_section: object = {
            "median_lag_seconds": reactivity.median_lag_seconds,
            "n_matched_shocks": reactivity.n_matched_shocks,
            "unmatched_shocks": list(reactivity.unmatched_shocks),
        }
    except UndefinedMetricError as exc:
        reactivity_section = NOT_DISCLOSED
        reasons["reactivity"] = str(exc)

    vaults = sorted({p.vault for p in history})
    if dataset.dependencies and vaults:
        sub = _reachable(set(vaults), dataset.dependencies)
        rehypo = rehypothecation_map(sub)
        rehypothecation_section: object = {
            "edges": [
                {"from": e.from_vault, "to": e.to_target, "kind": e.kind.value}
                for e in rehypo.edges
            ],
            "max_depth": rehypo.max_depth,
            "cycles": [list(c) for c in rehypo.cycles],
        }
    else:
        rehypothecation_section = NOT_DISCLOSED
        reasons["rehypothecation"] = (
            "no dependency edges in dataset" if vaults else "entity has no vaults"
        )

    try:
        fairness = fairness_metrics(dataset.events, entity, min_cohort_n)
        fairness_section: object = {
            "cohorts": {
                c: {
                    "approvals": s.approvals,
                    "rejections": s.rejections,
                    "approval_rate": s.approval_rate,
                }
                for c, s in fairness.cohorts.items()
            },
            "disparity_ratio": fairness.disparity_ratio,
            "excluded_cohorts": list(fairness.excluded_cohorts),
        }
    except UndefinedMetricError as exc:
        fairness_section = NOT_DISCLOSED
        reasons["fairness"] = str(exc)

    return {
        "entity": {"kind": entity.kind.value, "name": entity.name},
        "as_of": as_of.isoformat(),
        "issuer_concentration": issuer_section,
        "liquidity_coverage": liquidity_section,
        "attestation": attestation_section,
        "reactivity": reactivity_section,
        "rehypothecation": rehypothecation_section,
        "fairness": fairness_section,
        "metadata": {
            "schema": "vaultscope.disclosure/v1",
            "as_of_seconds": _end_of_day_seconds(as_of),
            "as_of_rule": "end of the as_of calendar day, UTC",
            "match_window_seconds": match_window_seconds,
            "min_cohort_n": min_cohort_n,
            "liquidity_policy": "strict",
            "scenarios": [
                {
                    "name": s.name,
                    "slippage_bps": s.slippage_bps,
                    "haircuts": dict(sorted(s.haircuts.items())),
                }
                for s in scenarios
            ],
            "vaults": vaults,
            "not_disclosed_reasons": dict(sorted(reasons.items())),
        },
    }
