"""Liquidity coverage, reactivity, cadence, rehypothecation, fairness,
and the assembled disclosure bundle."""

import json
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaultscope.data import (
    AssetClass,
    AssetClassification,
    DependencyEdge,
    DependencyKind,
    EntityId,
    EntityKind,
    Event,
    EventKind,
    LiquidityProfile,
    UNBOUNDED,
    UndefinedMetricError,
    UnknownAssetError,
)
from vaultscope.disclosure import (
    StressScenario,
    attestation_cadence,
    emit_disclosure_bundle,
    fairness_metrics,
    liquidity_coverage,
    parameter_reactivity,
    rehypothecation_map,
    render_bundle,
)

CUR = EntityId(EntityKind.curator, "ada")

CLASSIFICATION = AssetClassification(
    class_of={"X": AssetClass.volatile, "USDC": AssetClass.stable},
    family_of={"X": "X", "USDC": "USD-stable"},
)


def profile(entries):
    return LiquidityProfile(
        {(a, bps): (UNBOUNDED if d == "inf" else Decimal(str(d))) for (a, bps), d in entries.items()}
    )


def event(ts, kind, payload=None, entity=CUR):
    return Event(ts, entity, kind, payload or {})


class TestLiquidityCoverage:
    def test_all_unbounded_full_coverage(self):
        p = profile({("X", 100): "inf", ("USDC", 100): "inf"})
        scenario = StressScenario("base", 100)
        assert liquidity_coverage({"X": 50, "USDC": 50}, p, scenario) == 1.0

    def test_hand_case_seventy_percent(self):
        p = profile({("X", 100): 40, ("USDC", 100): "inf"})
        scenario = StressScenario("base", 100)
        value = liquidity_coverage({"X": 100, "USDC": 100}, p, scenario)
        assert value == pytest.approx(0.7, abs=0)

    def test_zero_depth_sole_asset(self):
        p = profile({("X", 100): 0})
        assert liquidity_coverage({"X": 10}, p, StressScenario("base", 100)) == 0.0

    def test_missing_depth_strict_raises(self):
        p = profile({("X", 100): 40})
        with pytest.raises(UnknownAssetError):
            liquidity_coverage({"X": 10, "USDC": 10}, p, StressScenario("base", 100))

    def test_missing_depth_lenient_counts_zero(self):
        p = profile({("X", 100): "inf"})
        value = liquidity_coverage(
            {"X": 50, "USDC": 50}, p, StressScenario("base", 100), strict=False
        )
        assert value == 0.5

    def test_depth_lookup_floors_to_recorded_slippage(self):
        p = profile({("X", 50): 10, ("X", 200): 80})
        assert liquidity_coverage({"X": 100}, p, StressScenario("s", 100)) == pytest.approx(0.1)
        assert liquidity_coverage({"X": 100}, p, StressScenario("s", 200)) == pytest.approx(0.8)
        # below the lowest recorded slippage nothing can be unwound
        assert liquidity_coverage({"X": 100}, p, StressScenario("s", 25)) == 0.0

    def test_haircut_applies_per_class(self):
        p = profile({("X", 100): 80, ("USDC", 100): "inf"})
        scenario = StressScenario("stress", 100, {"volatile": 0.5})
        value = liquidity_coverage({"X": 100, "USDC": 100}, p, scenario, CLASSIFICATION)
        assert value == pytest.approx((40 + 100) / 200)

    def test_zero_haircut_voids_unbounded_depth(self):
        p = profile({("X", 100): "inf"})
        scenario = StressScenario("freeze", 100, {"volatile": 0.0})
        assert liquidity_coverage({"X": 10}, p, scenario, CLASSIFICATION) == 0.0

    @given(
        st.floats(min_value=1, max_value=1e5),
        st.floats(min_value=0, max_value=1e5),
        st.floats(min_value=0, max_value=1e5),
    )
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_depth(self, position, d1, bump):
        lo = profile({("X", 100): d1})
        hi = profile({("X", 100): d1 + bump})
        scenario = StressScenario("s", 100)
        assert liquidity_coverage({"X": position}, hi, scenario) >= liquidity_coverage(
            {"X": position}, lo, scenario
        )

    @given(st.floats(min_value=1, max_value=1e5), st.integers(min_value=1, max_value=500))
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_slippage(self, position, extra_bps):
        p = profile({("X", 50): 10, ("X", 100): 60, ("X", 300): 200})
        base = liquidity_coverage({"X": position}, p, StressScenario("s", 50))
        wider = liquidity_coverage({"X": position}, p, StressScenario("s", 50 + extra_bps))
        assert wider >= base

    def test_full_coverage_iff_every_position_covered(self):
        p = profile({("X", 100): 99, ("USDC", 100): "inf"})
        value = liquidity_coverage({"X": 100, "USDC": 100}, p, StressScenario("s", 100))
        assert value < 1.0
        p_full = profile({("X", 100): 100, ("USDC", 100): "inf"})
        assert liquidity_coverage({"X": 100, "USDC": 100}, p_full, StressScenario("s", 100)) == 1.0


class TestParameterReactivity:
    def test_two_shocks_same_lag(self):
        events = [
            event(1_000, EventKind.shock),
            event(1_000 + 7200, EventKind.param_change),
            event(50_000, EventKind.shock),
            event(50_000 + 7200, EventKind.param_change),
        ]
        r = parameter_reactivity(events, CUR, 86_400)
        assert r.median_lag_seconds == 7200
        assert r.n_matched_shocks == 2
        assert r.unmatched_shocks == ()

    def test_single_shock_sixty_seconds(self):
        events = [event(100, EventKind.shock), event(160, EventKind.param_change)]
        r = parameter_reactivity(events, CUR, 3600)
        assert r.median_lag_seconds == 60

    def test_shock_without_change_listed_unmatched(self):
        events = [event(100, EventKind.shock), event(100 + 999_999, EventKind.param_change)]
        r = parameter_reactivity(events, CUR, 3600)
        assert r.n_matched_shocks == 0
        assert r.median_lag_seconds is None
        assert r.unmatched_shocks == (100,)

    def test_change_matches_at_most_one_shock(self):
        events = [
            event(100, EventKind.shock),
            event(200, EventKind.shock),
            event(250, EventKind.param_change),
        ]
        r = parameter_reactivity(events, CUR, 3600)
        # the earlier shock wins the only change
        assert r.n_matched_shocks == 1
        assert r.median_lag_seconds == 150
        assert r.unmatched_shocks == (200,)

    def test_even_count_median_averages_middle_two(self):
        events = []
        for base, lag in [(0, 100), (10_000, 200), (20_000, 400), (30_000, 800)]:
            events.append(event(base, EventKind.shock))
            events.append(event(base + lag, EventKind.param_change))
        r = parameter_reactivity(events, CUR, 3600)
        assert r.median_lag_seconds == 300  # mean of 200 and 400

    def test_unrelated_events_do_not_disturb_matching(self):
        events = [
            event(1_000, EventKind.shock),
            event(1_000 + 7200, EventKind.param_change),
        ]
        noisy = events + [
            event(1_500, EventKind.attestation),
            event(2_000, EventKind.credit_decision, {"cohort": "r", "outcome": "approve"}),
        ]
        assert parameter_reactivity(noisy, CUR, 86_400) == parameter_reactivity(events, CUR, 86_400)

    def test_no_shocks_is_an_error(self):
        with pytest.raises(UndefinedMetricError):
            parameter_reactivity([event(5, EventKind.param_change)], CUR, 60)


class TestAttestationCadence:
    def test_constant_daily_cadence(self):
        events = [event(i * 86_400, EventKind.attestation) for i in range(5)]
        c = attestation_cadence(events, CUR, 5 * 86_400)
        assert c.median_gap_seconds == 86_400

    def test_median_of_three_gaps(self):
        stamps = [0, 3600, 3600 + 7200, 3600 + 7200 + 9000]
        events = [event(t, EventKind.attestation) for t in stamps]
        c = attestation_cadence(events, CUR, stamps[-1] + 10)
        assert c.median_gap_seconds == 7200

    def test_staleness(self):
        events = [event(900, EventKind.attestation)]
        c = attestation_cadence(events, CUR, 1_000)
        assert c.max_staleness_seconds == 100
        assert c.median_gap_seconds is None

    def test_no_attestations_error(self):
        with pytest.raises(UndefinedMetricError):
            attestation_cadence([], CUR, 1_000)


def edge(src, dst, kind=DependencyKind.market_allocation):
    return DependencyEdge(src, dst, kind)


def brute_force_cycles(nodes, arcs):
    """DFS over every start node; canonical rotation dedupes each cycle."""
    adj = {}
    for a, b in arcs:
        adj.setdefault(a, set()).add(b)
    found = set()

    def walk(path, seen):
        u = path[-1]
        for v in adj.get(u, ()):
            if v == path[0]:
                k = path.index(min(path))
                found.add(tuple(path[k:] + path[:k]))
            elif v not in seen:
                walk(path + [v], seen | {v})

    for s in nodes:
        walk([s], {s})
    return found


class TestRehypothecationMap:
    def test_empty(self):
        m = rehypothecation_map([])
        assert m.max_depth == 0
        assert m.cycles == ()

    def test_chain_depth_two(self):
        m = rehypothecation_map([edge("A", "B"), edge("B", "C")])
        assert m.max_depth == 2
        assert m.cycles == ()

    def test_two_cycle_reported_once(self):
        m = rehypothecation_map([edge("A", "B"), edge("B", "A")])
        assert m.cycles == (("A", "B"),)
        assert m.max_depth == 0

    def test_cycle_rotated_to_smallest_node(self):
        m = rehypothecation_map([edge("C", "B"), edge("B", "A"), edge("A", "C")])
        assert m.cycles == (("A", "C", "B"),)

    def test_depth_skips_cycle_interior(self):
        arcs = [edge("A", "B"), edge("B", "A"), edge("B", "C"), edge("C", "D")]
        m = rehypothecation_map(arcs)
        # B->C->D crosses two component boundaries
        assert m.max_depth == 2
        assert m.cycles == (("A", "B"),)

    def test_matches_brute_force_on_all_three_node_digraphs(self):
        nodes = ["A", "B", "C"]
        arcs = [(a, b) for a in nodes for b in nodes if a != b]
        for mask in range(2 ** len(arcs)):
            chosen = [arcs[i] for i in range(len(arcs)) if mask >> i & 1]
            got = {tuple(c) for c in rehypothecation_map([edge(a, b) for a, b in chosen]).cycles}
            assert got == brute_force_cycles(nodes, chosen), f"mask={mask}"

    def test_matches_brute_force_on_random_eight_node_graphs(self):
        import random

        rng = random.Random(41)
        names = list("ABCDEFGH")
        for _ in range(25):
            chosen = [
                (a, b) for a in names for b in names if a != b and rng.random() < 0.25
            ]
            got = {tuple(c) for c in rehypothecation_map([edge(a, b) for a, b in chosen]).cycles}
            assert got == brute_force_cycles(names, chosen)


class TestFairness:
    def decision(self, ts, cohort, outcome):
        return event(ts, EventKind.credit_decision, {"cohort": cohort, "outcome": outcome})

    def test_single_cohort(self):
        events = [self.decision(i, "retail", "approve") for i in range(3)]
        events.append(self.decision(99, "retail", "reject"))
        report = fairness_metrics(events, CUR, min_cohort_n=1)
        assert report.cohorts["retail"].approval_rate == 0.75
        assert report.disparity_ratio == 1.0

    def test_identical_rates_disparity_one(self):
        events = []
        for cohort in ("a", "b"):
            events += [self.decision(i, cohort, "approve") for i in range(2)]
            events += [self.decision(10 + i, cohort, "reject") for i in range(2)]
        report = fairness_metrics(events, CUR, min_cohort_n=1)
        assert report.disparity_ratio == 1.0

    def test_zero_approval_cohort_floors_disparity(self):
        events = [self.decision(1, "a", "approve"), self.decision(2, "b", "reject")]
        report = fairness_metrics(events, CUR, min_cohort_n=1)
        assert report.cohorts["b"].approval_rate == 0.0
        assert report.disparity_ratio == 0.0

    def test_small_cohorts_excluded(self):
        events = [self.decision(i, "big", "approve") for i in range(10)]
        events.append(self.decision(50, "tiny", "reject"))
        report = fairness_metrics(events, CUR, min_cohort_n=10)
        assert "tiny" in report.excluded_cohorts
        assert "tiny" not in report.cohorts

    def test_no_qualifying_cohorts_error(self):
        events = [self.decision(1, "tiny", "approve")]
        with pytest.raises(UndefinedMetricError):
            fairness_metrics(events, CUR, min_cohort_n=10)


BUNDLE_FILES = {
    "positions.csv": (
        "date,curator,vault,pool,chain,asset,amount_usd\n"
        "2024-06-01,ada,ada-core,P1,ethereum,X,100\n"
        "2024-06-01,ada,ada-core,P2,ethereum,USDC,100\n"
        "2024-06-01,bea,bea-core,P3,ethereum,USDC,40\n"
    ),
    "classification.json": (
        '{"assets": {"X": {"class": "volatile", "family": "X", "issuer": "xlabs"},'
        ' "USDC": {"class": "stable", "family": "USD-stable", "issuer": "circle"}},'
        ' "default_policy": "strict"}'
    ),
    "liquidity.csv": "asset,slippage_bps,depth_usd\nX,100,40\nUSDC,100,inf\n",
    "deps.csv": (
        "from_vault,to_target,kind\n"
        "ada-core,P1,market_allocation\n"
        "ada-core,P2,market_allocation\n"
    ),
    "events.csv": (
        "timestamp,entity_kind,entity_name,kind,payload\n"
        '2024-05-01T00:00:00Z,curator,ada,attestation,"{""signer"": ""sig-1""}"\n'
        '2024-05-02T00:00:00Z,curator,ada,attestation,"{""signer"": ""sig-1""}"\n'
        "2024-05-03T00:00:00Z,curator,ada,shock,{}\n"
        '2024-05-03T02:00:00Z,curator,ada,param_change,"{""param"": ""ltv""}"\n'
        '2024-05-04T00:00:00Z,curator,ada,credit_decision,"{""cohort"": ""retail"", ""outcome"": ""approve""}"\n'
        '2024-05-04T00:00:01Z,curator,ada,credit_decision,"{""cohort"": ""retail"", ""outcome"": ""reject""}"\n'
    ),
}


class TestBundle:
    def test_full_inputs_populate_all_sections(self, make_dataset):
        ds = make_dataset(BUNDLE_FILES)
        doc = emit_disclosure_bundle(ds, CUR, min_cohort_n=1)
        for section in (
            "issuer_concentration",
            "liquidity_coverage",
            "attestation",
            "reactivity",
            "rehypothecation",
            "fairness",
        ):
            assert doc[section] != "not_disclosed", section
        assert doc["liquidity_coverage"][0]["value"] == pytest.approx(0.7)
        assert doc["reactivity"]["median_lag_seconds"] == 7200
        assert doc["issuer_concentration"]["hhi"] == pytest.approx(0.5)
        assert doc["attestation"]["signer"] == "sig-1"

    def test_entity_without_events_marks_not_disclosed(self, make_dataset):
        ds = make_dataset(BUNDLE_FILES)
        doc = emit_disclosure_bundle(ds, EntityId(EntityKind.curator, "bea"))
        assert doc["attestation"] == "not_disclosed"
        assert doc["reactivity"] == "not_disclosed"
        assert doc["fairness"] == "not_disclosed"
        assert "attestation" in doc["metadata"]["not_disclosed_reasons"]

    def test_unknown_entity_rejected(self, make_dataset):
        ds = make_dataset(BUNDLE_FILES)
        with pytest.raises(UndefinedMetricError):
            emit_disclosure_bundle(ds, EntityId(EntityKind.curator, "ghost"))

    def test_vault_entity_bundle(self, make_dataset):
        ds = make_dataset(BUNDLE_FILES)
        doc = emit_disclosure_bundle(ds, EntityId(EntityKind.vault, "ada-core"))
        assert doc["issuer_concentration"]["shares"] == {"circle": 0.5, "xlabs": 0.5}

    def test_render_is_byte_deterministic(self, make_dataset):
        ds = make_dataset(BUNDLE_FILES)
        a = render_bundle(emit_disclosure_bundle(ds, CUR, min_cohort_n=1))
        b = render_bundle(emit_disclosure_bundle(ds, CUR, min_cohort_n=1))
        assert a == b
        parsed = json.loads(a)
        assert list(parsed.keys()) == [
            "entity",
            "as_of",
            "issuer_concentration",
            "liquidity_coverage",
            "attestation",
            "reactivity",
            "rehypothecation",
            "fairness",
            "metadata",
        ]

    def test_twelve_significant_digits(self):
        text = render_bundle({"value": 0.123456789012345678})
        assert json.loads(text)["value"] == 0.123456789012
