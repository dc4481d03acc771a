"""Parsing, validation, calendar alignment, and market shares."""

import random
from datetime import date, timedelta
from decimal import Decimal
from pathlib import Path

import pytest

from vaultscope.data import (
    DatasetError,
    EntityId,
    EntityKind,
    TvlSeries,
    UNBOUNDED,
    UndefinedMetricError,
    align_calendar,
    load_dataset,
    market_share,
    parse_dataset,
    write_dataset,
)

TVL_3ROWS = """entity_kind,entity_name,chain,date,tvl_usd
protocol,alpha,ethereum,2024-01-01,100
protocol,alpha,ethereum,2024-01-02,110
protocol,alpha,ethereum,2024-01-03,90
"""

CLASSIFICATION = """{
  "assets": {
    "USDC": {"class": "stable", "family": "USD-stable", "issuer": "circle"},
    "WETH": {"class": "volatile", "family": "ETH"}
  },
  "default_policy": "strict"
}
"""


def entity(name, kind=EntityKind.protocol):
    return EntityId(kind, name)


def series(name, *points, kind=EntityKind.protocol):
    return TvlSeries(entity(name, kind), tuple((d, Decimal(v)) for d, v in points))


class TestParsing:
    def test_three_row_tvl_csv(self, make_dataset):
        ds = make_dataset({"tvl.csv": TVL_3ROWS})
        s = ds.tvl_series(entity("alpha"))
        assert len(s.points) == 3
        assert s.points[0] == (date(2024, 1, 1), Decimal(100))

    def test_negative_tvl_names_row(self, make_dataset):
        bad = TVL_3ROWS.replace("2024-01-02,110", "2024-01-02,-5")
        with pytest.raises(DatasetError) as err:
            make_dataset({"tvl.csv": bad})
        assert any(i.line == 3 for i in err.value.issues)
        assert "nonnegative" in str(err.value)

    def test_duplicate_position_key_rejected(self, make_dataset):
        body = (
            "date,curator,vault,pool,chain,asset,amount_usd\n"
            "2024-01-01,cur,core,p1,ethereum,USDC,100\n"
            "2024-01-01,cur,core,p1,ethereum,USDC,50\n"
        )
        with pytest.raises(DatasetError) as err:
            make_dataset({"positions.csv": body, "classification.json": CLASSIFICATION})
        assert any("duplicate key" in i.message for i in err.value.issues)

    def test_intraday_date_rejected(self, make_dataset):
        bad = TVL_3ROWS.replace("2024-01-02", "2024-01-02T05:00:00")
        with pytest.raises(DatasetError) as err:
            make_dataset({"tvl.csv": bad})
        assert any(i.column == "date" for i in err.value.issues)

    def test_unknown_asset_strict_policy(self, make_dataset):
        body = (
            "date,curator,vault,pool,chain,asset,amount_usd\n"
            "2024-01-01,cur,core,p1,ethereum,MYSTERY,100\n"
        )
        with pytest.raises(DatasetError) as err:
            make_dataset({"positions.csv": body, "classification.json": CLASSIFICATION})
        assert any("MYSTERY" in i.message for i in err.value.issues)

    def test_unknown_asset_volatile_policy_warns(self, make_dataset):
        body = (
            "date,curator,vault,pool,chain,asset,amount_usd\n"
            "2024-01-01,cur,core,p1,ethereum,MYSTERY,100\n"
        )
        lenient = CLASSIFICATION.replace('"strict"', '"volatile"')
        ds = make_dataset({"positions.csv": body, "classification.json": lenient})
        assert any("MYSTERY" in w for w in ds.warnings)

    def test_bad_header_reported(self, make_dataset):
        with pytest.raises(DatasetError) as err:
            make_dataset({"tvl.csv": "a,b,c\n1,2,3\n"})
        assert any("header" in i.message for i in err.value.issues)

    def test_malformed_decimal_names_column(self, make_dataset):
        bad = TVL_3ROWS.replace("110", "eleven")
        with pytest.raises(DatasetError) as err:
            make_dataset({"tvl.csv": bad})
        issue = next(i for i in err.value.issues if i.line == 3)
        assert issue.column == "tvl_usd"

    def test_row_order_irrelevant(self, tmp_path):
        lines = TVL_3ROWS.strip().split("\n")
        shuffled = [lines[0]] + [lines[3], lines[1], lines[2]]
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir()
        b.mkdir()
        (a / "tvl.csv").write_text(TVL_3ROWS)
        (b / "tvl.csv").write_text("\n".join(shuffled) + "\n")
        assert load_dataset(a) == load_dataset(b)

    def test_round_trip(self, tmp_path, make_dataset):
        ds = make_dataset(
            {
                "tvl.csv": TVL_3ROWS,
                "positions.csv": (
                    "date,curator,vault,pool,chain,asset,amount_usd\n"
                    "2024-01-01,cur,core,p1,ethereum,USDC,100.5\n"
                ),
                "classification.json": CLASSIFICATION,
                "liquidity.csv": "asset,slippage_bps,depth_usd\nUSDC,100,inf\nWETH,100,500\n",
                "deps.csv": "from_vault,to_target,kind\ncore,p1,market_allocation\n",
            }
        )
        out = tmp_path / "rt"
        paths = write_dataset(ds, out)
        assert load_dataset(out) == ds
        assert all(isinstance(p, Path) for p in paths)

    def test_unbounded_liquidity_depth(self, make_dataset):
        ds = make_dataset({"liquidity.csv": "asset,slippage_bps,depth_usd\nUSDC,100,inf\n"})
        assert ds.liquidity.depth_at("USDC", 100) == UNBOUNDED

    def test_decreasing_depth_rejected(self, make_dataset):
        body = "asset,slippage_bps,depth_usd\nWETH,50,100\nWETH,100,40\n"
        with pytest.raises(DatasetError) as err:
            make_dataset({"liquidity.csv": body})
        assert any("decreases" in i.message for i in err.value.issues)

    def test_meta_vault_self_edge_rejected(self, make_dataset):
        body = "from_vault,to_target,kind\nv1,v1,meta_vault\n"
        with pytest.raises(DatasetError) as err:
            make_dataset({"deps.csv": body})
        assert any("self-allocation" in i.message for i in err.value.issues)

    def test_credit_decision_payload_required(self, make_dataset):
        body = (
            "timestamp,entity_kind,entity_name,kind,payload\n"
            '2024-01-01T00:00:00Z,curator,cur,credit_decision,"{""outcome"": ""approve""}"\n'
        )
        with pytest.raises(DatasetError) as err:
            make_dataset({"events.csv": body})
        assert any("cohort" in i.message for i in err.value.issues)

    def test_unknown_schema_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            parse_dataset([], schema="v2")


class TestAlignCalendar:
    def test_forward_fill_bridges_gap(self):
        s = series("a", (date(2024, 1, 1), 100), (date(2024, 1, 3), 90))
        aligned = align_calendar(s, "forward_fill")
        assert aligned.series.points == (
            (date(2024, 1, 1), Decimal(100)),
            (date(2024, 1, 2), Decimal(100)),
            (date(2024, 1, 3), Decimal(90)),
        )

    def test_contiguous_series_unchanged_both_policies(self):
        s = series("a", (date(2024, 1, 1), 100), (date(2024, 1, 2), 110))
        assert align_calendar(s, "forward_fill").series == s
        assert align_calendar(s, "drop_gaps").series == s

    def test_drop_gaps_counts_missing_days(self):
        s = series("a", (date(2024, 1, 1), 100), (date(2024, 1, 4), 80))
        aligned = align_calendar(s, "drop_gaps")
        assert aligned.series == s
        assert aligned.gap_count == 2

    def test_forward_fill_point_count_and_idempotence(self):
        rng = random.Random(7)
        days = sorted(rng.sample(range(60), 12))
        s = series("a", *((date(2024, 1, 1) + timedelta(days=d), rng.randint(1, 500)) for d in days))
        aligned = align_calendar(s, "forward_fill")
        span = (s.points[-1][0] - s.points[0][0]).days + 1
        assert len(aligned.series.points) == span
        again = align_calendar(aligned.series, "forward_fill")
        assert again.series == aligned.series
        assert again.gap_count == 0


class TestMarketShare:
    def test_single_protocol_full_share(self):
        s = series("solo", (date(2024, 1, 1), 42))
        assert market_share([s], date(2024, 1, 1)) == {entity("solo"): 1.0}

    def test_leader_share_of_heavy_tail(self):
        # 34 over a 75.56 total lands at about 45 percent
        a = series("big", (date(2024, 1, 1), 34))
        rest = series("others", (date(2024, 1, 1), Decimal("41.56")))
        shares = market_share([a, rest], date(2024, 1, 1))
        assert shares[entity("big")] == pytest.approx(0.45, abs=0.001)

    def test_direct_division(self):
        a = series("a", (date(2024, 1, 1), 60))
        b = series("b", (date(2024, 1, 1), 40))
        shares = market_share([a, b], date(2024, 1, 1))
        assert shares == {entity("a"): 0.6, entity("b"): 0.4}
        assert abs(sum(shares.values()) - 1.0) < 1e-12

    def test_zero_total_is_undefined(self):
        s = series("a", (date(2024, 1, 1), 0))
        with pytest.raises(UndefinedMetricError):
            market_share([s], date(2024, 1, 1))
