"""Overlap weights, graph construction, and centrality measures."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaultscope.data import EntityId, EntityKind, UndefinedMetricError
from vaultscope.network import (
    OverlapGraph,
    betweenness_centrality,
    build_graph,
    degree_centrality,
    eigenvector_centrality,
    overlap_weight,
)


def cur(name):
    return EntityId(EntityKind.curator, name)


def graph_from(n, weighted_edges, threshold=0.0):
    nodes = tuple(cur(f"c{i}") for i in range(n))
    return OverlapGraph(nodes, tuple(weighted_edges), threshold)


portfolio_strategy = st.dictionaries(
    st.sampled_from([f"pool{i}" for i in range(12)]),
    st.floats(min_value=0.01, max_value=1e6),
    min_size=1,
    max_size=12,
)


class TestOverlapWeight:
    def test_disjoint_pools(self):
        assert overlap_weight({"p1": 100}, {"p2": 50}) == 0.0

    def test_nested_portfolio_weighs_one(self):
        big = {"p1": 100, "p2": 100, "p3": 300}
        small = {"p1": 40, "p3": 10}
        assert overlap_weight(big, small) == 1.0
        assert overlap_weight(small, big) == 1.0

    def test_hand_case_quarter(self):
        a = {"P1": 100, "P2": 100}
        b = {"P1": 50, "P3": 150}
        assert overlap_weight(a, b) == 0.25

    def test_zero_total_undefined(self):
        with pytest.raises(UndefinedMetricError):
            overlap_weight({"p1": 0}, {"p1": 5})

    @given(portfolio_strategy, portfolio_strategy)
    @settings(max_examples=200, deadline=None)
    def test_symmetry_and_range(self, a, b):
        w = overlap_weight(a, b)
        assert w == overlap_weight(b, a)
        assert 0.0 <= w <= 1.0

    @given(portfolio_strategy, portfolio_strategy, st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=200, deadline=None)
    def test_scale_invariance(self, a, b, k):
        base = overlap_weight(a, b)
        scaled = overlap_weight({p: v * k for p, v in a.items()}, {p: v * k for p, v in b.items()})
        assert scaled == pytest.approx(base, abs=1e-12)

    @given(portfolio_strategy, portfolio_strategy, st.floats(min_value=0.01, max_value=1e6))
    @settings(max_examples=200, deadline=None)
    def test_private_pool_of_smaller_never_raises_weight(self, a, b, extra):
        ta, tb = sum(a.values()), sum(b.values())
        small, big = (a, b) if ta <= tb else (b, a)
        before = overlap_weight(small, big)
        grown = dict(small)
        grown["private-pool"] = extra
        if sum(grown.values()) <= sum(big.values()):  # still the smaller book
            assert overlap_weight(grown, big) <= before + 1e-12

    def test_smaller_shared_mode(self):
        a = {"P1": 100, "P2": 100}
        b = {"P1": 50, "P3": 150}
        # b and a have equal totals; shared sums are 100 (a) vs 50 (b)
        assert overlap_weight(a, b, mode="smaller_shared") == 0.25
        # with b strictly smaller, its full shared holdings count
        b_small = {"P1": 50, "P3": 100}
        assert overlap_weight(a, b_small, mode="smaller_shared") == pytest.approx(50 / 150)
        assert overlap_weight(b_small, a, mode="smaller_shared") == pytest.approx(50 / 150)


class TestBuildGraph:
    POSITIONS = (
        "date,curator,vault,pool,chain,asset,amount_usd\n"
        "2024-06-01,ada,core,P1,ethereum,USDC,100\n"
        "2024-06-01,ada,core,P2,ethereum,USDC,100\n"
        "2024-06-01,bob,core,P1,ethereum,USDC,50\n"
        "2024-06-01,bob,core,P3,ethereum,USDC,150\n"
        "2024-06-01,eve,core,P9,ethereum,USDC,75\n"
    )
    CLASSIFICATION = '{"assets": {"USDC": {"class": "stable", "family": "USD-stable"}}, "default_policy": "strict"}'

    def test_disjoint_curators_no_edges(self, make_dataset):
        ds = make_dataset(
            {
                "positions.csv": (
                    "date,curator,vault,pool,chain,asset,amount_usd\n"
                    "2024-06-01,ada,core,P1,ethereum,USDC,100\n"
                    "2024-06-01,eve,core,P9,ethereum,USDC,75\n"
                ),
                "classification.json": self.CLASSIFICATION,
            }
        )
        g = build_graph(ds)
        assert len(g.nodes) == 2
        assert g.edges == ()

    def test_quarter_edge_retained_at_default_threshold(self, make_dataset):
        ds = make_dataset(
            {"positions.csv": self.POSITIONS, "classification.json": self.CLASSIFICATION}
        )
        g = build_graph(ds)  # ada-bob weight 0.25
        assert len(g.nodes) == 3  # eve stays as an isolated node
        assert len(g.edges) == 1
        i, j, w = g.edges[0]
        assert {g.nodes[i].name, g.nodes[j].name} == {"ada", "bob"}
        assert w == 0.25

    def test_edge_below_threshold_dropped(self, make_dataset):
        ds = make_dataset(
            {"positions.csv": self.POSITIONS, "classification.json": self.CLASSIFICATION}
        )
        g = build_graph(ds, threshold=0.30)
        assert g.edges == ()


class TestDegreeCentrality:
    def test_complete_graph(self):
        edges = [(i, j, 0.5) for i in range(4) for j in range(i + 1, 4)]
        g = graph_from(4, edges)
        assert set(degree_centrality(g).values()) == {1.0}

    def test_star(self):
        g = graph_from(4, [(0, 1, 0.5), (0, 2, 0.5), (0, 3, 0.5)])
        d = degree_centrality(g)
        assert d[cur("c0")] == 1.0
        assert d[cur("c1")] == pytest.approx(1 / 3)

    def test_isolated_node_zero(self):
        g = graph_from(3, [(0, 1, 0.5)])
        assert degree_centrality(g)[cur("c2")] == 0.0

    def test_single_node_rejected(self):
        with pytest.raises(UndefinedMetricError):
            degree_centrality(graph_from(1, []))


def brute_force_betweenness(n, edges):
    """Enumerate every simple path per pair; count the shortest ones."""
    adj = {i: {} for i in range(n)}
    for i, j, w in edges:
        adj[i][j] = adj[j][i] = 1.0 / w

    def all_paths(s, t):
        paths = []

        def walk(u, path, length):
            if u == t:
                paths.append((length, tuple(path)))
                return
            for v, d in adj[u].items():
                if v not in path:
                    path.append(v)
                    walk(v, path, length + d)
                    path.pop()

        walk(s, [s], 0.0)
        return paths

    score = {i: 0.0 for i in range(n)}
    for s, t in itertools.combinations(range(n), 2):
        paths = all_paths(s, t)
        if not paths:
            continue
        best = min(length for length, _ in paths)
        shortest = [p for length, p in paths if length == best]
        for p in shortest:
            for v in p[1:-1]:
                score[v] += 1.0 / len(shortest)
    scale = (n - 1) * (n - 2) / 2
    return {i: v / scale for i, v in score.items()}


class TestBetweenness:
    def test_path_graph_center(self):
        g = graph_from(3, [(0, 1, 0.8), (1, 2, 0.3)])
        b = betweenness_centrality(g)
        assert b[cur("c1")] == 1.0
        assert b[cur("c0")] == 0.0
        assert b[cur("c2")] == 0.0

    def test_equal_weight_triangle_all_zero(self):
        g = graph_from(3, [(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)])
        assert set(betweenness_centrality(g).values()) == {0.0}

    def test_two_nodes_all_zero(self):
        g = graph_from(2, [(0, 1, 0.9)])
        assert set(betweenness_centrality(g).values()) == {0.0}

    def test_tie_splitting_on_square(self):
        # equal-weight 4-cycle: two shortest paths between opposite corners
        g = graph_from(4, [(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5), (0, 3, 0.5)])
        b = betweenness_centrality(g)
        expected = brute_force_betweenness(4, g.edges)
        for k in range(4):
            assert b[cur(f"c{k}")] == pytest.approx(expected[k], abs=1e-12)

    def test_matches_brute_force_on_random_graphs(self):
        rng = np.random.default_rng(5)
        weights = [1.0, 0.8, 0.5, 0.4, 0.25, 0.2]
        for _ in range(40):
            n = int(rng.integers(3, 8))
            edges = []
            for i, j in itertools.combinations(range(n), 2):
                if rng.random() < 0.5:
                    edges.append((i, j, weights[rng.integers(0, len(weights))]))
            g = graph_from(n, edges)
            got = betweenness_centrality(g)
            expected = brute_force_betweenness(n, edges)
            for k in range(n):
                assert got[cur(f"c{k}")] == pytest.approx(expected[k], abs=1e-9)


class TestEigenvector:
    def test_complete_graph_uniform(self):
        n = 5
        edges = [(i, j, 0.7) for i in range(n) for j in range(i + 1, n)]
        result = eigenvector_centrality(graph_from(n, edges))
        values = list(result.scores.values())
        assert result.converged
        assert len(set(values)) == 1  # symmetry gives identical entries
        assert values[0] == pytest.approx(1 / math.sqrt(n), abs=1e-12)

    def test_matches_dense_eigensolver(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            n = int(rng.integers(2, 9))
            edges = []
            for i, j in itertools.combinations(range(n), 2):
                if rng.random() < 0.6:
                    edges.append((i, j, float(rng.uniform(0.15, 1.0))))
            if not edges:
                continue
            g = graph_from(n, edges)
            result = eigenvector_centrality(g)
            assert result.converged
            comp_idx = [k for k, node in enumerate(g.nodes) if node in result.component]
            a = np.zeros((len(comp_idx), len(comp_idx)))
            pos = {k: r for r, k in enumerate(comp_idx)}
            for i, j, w in edges:
                if i in pos and j in pos:
                    a[pos[i], pos[j]] = a[pos[j], pos[i]] = w
            eigvals, eigvecs = np.linalg.eigh(a)
            lead = eigvecs[:, -1]
            if lead.sum() < 0:
                lead = -lead
            got = np.array([result.scores[g.nodes[k]] for k in comp_idx])
            assert np.max(np.abs(got - lead)) < 1e-9

    def test_unit_norm_over_component(self):
        g = graph_from(5, [(0, 1, 0.5), (1, 2, 0.4), (3, 4, 0.9)])
        result = eigenvector_centrality(g)
        comp_scores = [result.scores[n] for n in result.component]
        assert np.linalg.norm(comp_scores) == pytest.approx(1.0, abs=1e-9)

    def test_outside_largest_component_scores_zero(self):
        g = graph_from(5, [(0, 1, 0.5), (1, 2, 0.4), (3, 4, 0.9)])
        result = eigenvector_centrality(g)
        assert result.scores[cur("c3")] == 0.0
        assert result.scores[cur("c4")] == 0.0

    def test_bipartite_component_still_converges(self):
        # a 3-path is bipartite; the spectrum-shifted iteration handles it
        g = graph_from(3, [(0, 1, 0.5), (1, 2, 0.5)])
        result = eigenvector_centrality(g)
        assert result.converged
        assert result.scores[cur("c1")] == pytest.approx(math.sqrt(2) / 2, abs=1e-9)
        assert result.scores[cur("c0")] == pytest.approx(0.5, abs=1e-9)

    def test_edgeless_graph_all_zero(self):
        result = eigenvector_centrality(graph_from(3, []))
        assert set(result.scores.values()) == {0.0}

    def test_permutation_invariance(self):
        rng = np.random.default_rng(31)
        n = 6
        edges = [
            (i, j, float(rng.uniform(0.2, 1.0)))
            for i, j in itertools.combinations(range(n), 2)
            if rng.random() < 0.5
        ]
        g = graph_from(n, edges)
        perm = list(rng.permutation(n))
        remapped = sorted(
            (min(perm[i], perm[j]), max(perm[i], perm[j]), w) for i, j, w in edges
        )
        g2 = graph_from(n, remapped)
        r1 = eigenvector_centrality(g)
        r2 = eigenvector_centrality(g2)
        b1 = betweenness_centrality(g)
        b2 = betweenness_centrality(g2)
        for i in range(n):
            assert r2.scores[cur(f"c{perm[i]}")] == pytest.approx(r1.scores[cur(f"c{i}")], abs=1e-9)
            assert b2[cur(f"c{perm[i]}")] == pytest.approx(b1[cur(f"c{i}")], abs=1e-9)
