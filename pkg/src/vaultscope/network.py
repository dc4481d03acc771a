"""Curator overlap-graph construction and centrality measures.

Two curators are linked by the value they hold in the same underlying
pools: the edge weight is the sum of per-pool minimum holdings divided by
the smaller curator's total, so a curator fully nested inside another gets
weight 1 and disjoint books get 0. Edges below a materiality threshold
(default 0.15) are dropped.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Mapping

import numpy as np

from vaultscope.data import Dataset, EntityId, UndefinedMetricError

__all__ = [
    "EigenvectorResult",
    "OverlapGraph",
    "betweenness_centrality",
    "build_graph",
    "degree_centrality",
    "eigenvector_centrality",
    "overlap_weight",
]

WEIGHT_MODES = ("min_sum", "smaller_shared")


def _clean(portfolio: Mapping[str, object]) -> dict[str, float]:
    return {p: float(v) for p, v in portfolio.items() if float(v) > 0}


def overlap_weight(
    positions_i: Mapping[str, object],
    positions_j: Mapping[str, object],
    mode: str = "min_sum",
) -> float:
    """Portfolio overlap between two curators' pool-level holdings, in [0, 1].

    ``min_sum`` (default) sums min(tvl_i(p), tvl_j(p)) over shared pools;
    ``smaller_shared`` instead counts the smaller curator's full holdings in
    shared pools. Both divide by the smaller total, and both are exactly
    symmetric in their arguments.
    """
    if mode not in WEIGHT_MODES:
        raise ValueError(f"weight mode must be one of {WEIGHT_MODES}")
    pi = _clean(positions_i)
    pj = _clean(positions_j)
    ti = sum(pi[p] for p in sorted(pi))
    tj = sum(pj[p] for p in sorted(pj))
    if ti <= 0 or tj <= 0:
        raise UndefinedMetricError("overlap weight undefined for a zero-TVL curator")
    shared = sorted(pi.keys() & pj.keys())
    if mode == "min_sum":
        numerator = sum(min(pi[p], pj[p]) for p in shared)
    else:
        sum_i = sum(pi[p] for p in shared)
        sum_j = sum(pj[p] for p in shared)
        if ti < tj:
            numerator = sum_i
        elif tj < ti:
            numerator = sum_j
        else:
            numerator = min(sum_i, sum_j)  # keeps w(i,j) == w(j,i) on total ties
    return min(numerator / min(ti, tj), 1.0)


@dataclass(frozen=True)
class OverlapGraph:
    """Weighted undirected curator graph after edge thresholding.

    Edges are stored once per pair as (i, j, w) with i < j indexing into
    ``nodes``; isolated curators stay in the node set.
    """

    nodes: tuple[EntityId, ...]
    edges: tuple[tuple[int, int, float], ...]
    threshold: float
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for i, j, w in self.edges:
            if not 0 <= i < j < len(self.nodes):
                raise ValueError(f"bad edge indices ({i}, {j})")
            if not 0 < w <= 1:
                raise ValueError(f"edge weight {w} outside (0, 1]")
            if w < self.threshold:
                raise ValueError(f"edge weight {w} below threshold {self.threshold}")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in self.nodes]
        for i, j, w in self.edges:
            adj[i].append((j, w))
            adj[j].append((i, w))
        for neighbors in adj:
            neighbors.sort()
        return adj

    def components(self) -> list[list[int]]:
        adj = self.adjacency()
        seen = [False] * self.n
        comps: list[list[int]] = []
        for start in range(self.n):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            comps.append(sorted(comp))
        return comps


def build_graph(
    dataset: Dataset,
    on: date | None = None,
    threshold: float = 0.15,
    weight_mode: str = "min_sum",
    average: bool = False,
) -> OverlapGraph:
    """Overlap graph over all curators with positive book value.

    By default weights come from the last snapshot date (or ``on``); with
    ``average=True`` each pair's weight is the mean over all dates where
    both curators run a positive book, thresholded afterwards.
    """
    if not dataset.positions:
        raise UndefinedMetricError("no positions; overlap graph undefined")
    dates = dataset.position_dates()
    snap_dates = dates if average else [on if on is not None else dates[-1]]

    books: dict[date, dict[EntityId, dict[str, float]]] = {}
    for d in snap_dates:
        day = {}
        for curator in dataset.curators():
            pools = _clean(dataset.pool_totals(curator, d))
            if pools:
                day[curator] = pools
        books[d] = day

    active = sorted({c for day in books.values() for c in day}, key=lambda e: e.sort_key)
    if not active:
        raise UndefinedMetricError("no curator has positive TVL on the requested date(s)")

    edges: list[tuple[int, int, float]] = []
    for a in range(len(active)):
        for b in range(a + 1, len(active)):
            weights = []
            for d in snap_dates:
                day = books[d]
                if active[a] in day and active[b] in day:
                    weights.append(overlap_weight(day[active[a]], day[active[b]], weight_mode))
            if not weights:
                continue
            w = sum(weights) / len(weights)
            if w > 0 and w >= threshold:
                edges.append((a, b, w))

    metadata = {
        "weight_mode": weight_mode,
        "threshold": threshold,
        "graph_dates": [d.isoformat() for d in snap_dates],
        "averaged": average,
    }
    return OverlapGraph(tuple(active), tuple(edges), threshold, metadata)


def degree_centrality(graph: OverlapGraph) -> dict[EntityId, float]:
    """Retained-edge count per node over the maximum possible, deg/(n-1)."""
    if graph.n < 2:
        raise UndefinedMetricError("degree centrality needs at least 2 nodes")
    degree = [0] * graph.n
    for i, j, _ in graph.edges:
        degree[i] += 1
        degree[j] += 1
    return {node: degree[k] / (graph.n - 1) for k, node in enumerate(graph.nodes)}


def betweenness_centrality(graph: OverlapGraph) -> dict[EntityId, float]:
    """Share of shortest weighted paths passing through each node.

    Edge traversal length is 1/w, so stronger overlap means a shorter path.
    Equally short paths split pair dependencies evenly; scores are
    normalized by the (n-1)(n-2)/2 possible intermediary pairs, and
    disconnected pairs contribute nothing.
    """
    n = graph.n
    if n < 3:
        return {node: 0.0 for node in graph.nodes}
    adj = [[(v, 1.0 / w) for v, w in row] for row in graph.adjacency()]
    accumulated = [0.0] * n
    for s in range(n):
        dist = [math.inf] * n
        sigma = [0.0] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        done = [False] * n
        dist[s] = 0.0
        sigma[s] = 1.0
        order: list[int] = []
        heap: list[tuple[float, int]] = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            order.append(u)
            for v, length in adj[u]:
                if done[v]:
                    continue
                nd = d + length
                if nd < dist[v]:
                    dist[v] = nd
                    sigma[v] = sigma[u]
                    preds[v] = [u]
                    heapq.heappush(heap, (nd, v))
                elif nd == dist[v]:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = [0.0] * n
        for w_node in reversed(order):
            for v in preds[w_node]:
                delta[v] += sigma[v] / sigma[w_node] * (1.0 + delta[w_node])
            if w_node != s:
                accumulated[w_node] += delta[w_node]
    # each unordered pair is visited from both endpoints
    scale = (n - 1) * (n - 2)
    return {node: accumulated[k] / scale for k, node in enumerate(graph.nodes)}


@dataclass(frozen=True)
class EigenvectorResult:
    scores: dict[EntityId, float]
    converged: bool
    iterations: int
    component: tuple[EntityId, ...]


def eigenvector_centrality(
    graph: OverlapGraph, tol: float = 1e-12, max_iter: int = 10_000
) -> EigenvectorResult:
    """Principal eigenvector of the weighted adjacency of the largest component.

    Power iteration with Euclidean normalization; the iteration runs on the
    spectrum-shifted matrix A + I, which leaves the eigenvector unchanged
    but converges on bipartite components where the unshifted iteration
    oscillates. Nodes outside the largest component score 0. A result that
    fails to stabilize within ``max_iter`` is flagged via ``converged``.
    """
    if graph.n == 0:
        raise UndefinedMetricError("eigenvector centrality of an empty graph")
    if not graph.edges:
        return EigenvectorResult({node: 0.0 for node in graph.nodes}, True, 0, ())
    comps = graph.components()
    comp = max(comps, key=lambda c: (len(c), -c[0]))
    index = {u: k for k, u in enumerate(comp)}
    m = len(comp)
    a = np.zeros((m, m))
    for i, j, w in graph.edges:
        if i in index and j in index:
            a[index[i], index[j]] = w
            a[index[j], index[i]] = w
    shifted = a + np.eye(m)
    x = np.full(m, 1.0 / math.sqrt(m))
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        y = shifted @ x
        y /= np.linalg.norm(y)
        if np.linalg.norm(y - x) < tol:
            x = y
            converged = True
            break
        x = y
    scores = {node: 0.0 for node in graph.nodes}
    for u in comp:
        scores[graph.nodes[u]] = float(x[index[u]])
    return EigenvectorResult(scores, converged, iterations, tuple(graph.nodes[u] for u in comp))
