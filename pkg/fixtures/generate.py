#!/usr/bin/env python3
"""Deterministic synthetic snapshot generator for the bundled fixture.

Builds 400 days of data for 6 lending protocols and 8 curators with known,
hand-checkable structure:

* ``harbor`` holds a pool-by-pool fraction of ``atlas``'s book every day,
  so their overlap weight is exactly 1.0 (full nesting).
* ``beacon`` is the stable-heavy outlier: its volatile weight is capped at
  12% before normalization, keeping the volatile share below 0.2 always.
* ``gale`` enters on day 100 and shares no pool heavily enough to clear
  the default 0.15 edge threshold (an isolated graph node).
* ``fenwick`` is missing four TVL days, exercising gap handling.
* ``atlas`` carries a full event log: weekly attestations, five shocks
  with known parameter-change lags (median 7200 s, one shock unmatched),
  and credit decisions with exact 0.72 / 0.85 cohort approval rates.
* ``ember`` attests daily (86,400 s cadence).
* ``drift-loop`` and ``gale-loop`` form a meta-vault dependency cycle.

Every value is derived from a fixed seed; regenerating produces identical
bytes. See fixtures/README.md for the audit notes.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

SEED = 212
N_DAYS = 400
START = date(2024, 1, 1)

CHAIN_OF = {
    "auric": "ethereum",
    "breve": "ethereum",
    "cairn": "sonic",
    "dovet": "base",
    "ellum": "arbitrum",
    "fenwick": "ethereum",
}

ASSETS = {
    "WETH": ("volatile", "ETH", "ethwrap"),
    "wstETH": ("volatile", "ETH", "stakeport"),
    "WBTC": ("volatile", "BTC", "custowrap"),
    "tBTC": ("volatile", "BTC", "threshbridge"),
    "USDC": ("stable", "USD-stable", "mintcorp"),
    "USDT": ("stable", "USD-stable", "reservo"),
    "DAI": ("stable", "USD-stable", "collateralworks"),
    "PAXG": ("commodity", "gold", "goldmint"),
    "XAUT": ("commodity", "gold", "aurumco"),
    "TBILL": ("rwa", "RWA-tbill", "billvault"),
}

# protocol -> (base tvl, drift, vol, market beta, chain weight schedule)
# chain schedule: chain -> (weight at day 0, weight at day 399); linear in
# between, with optional activation day for late chains
PROTOCOLS = {
    "auric": (8.0e9, 0.0004, 0.010, 1.0, {
        "ethereum": (0.75, 0.55, 0),
        "arbitrum": (0.15, 0.24, 0),
        "base": (0.10, 0.14, 0),
        "optimism": (0.0, 0.07, 200),
    }),
    "breve": (1.5e9, 0.0003, 0.008, 0.5, {
        "ethereum": (1.0, 1.0, 0),
    }),
    "cairn": (0.9e9, 0.0008, 0.016, 1.2, {
        "sonic": (0.85, 0.45, 0),
        "ethereum": (0.15, 0.35, 0),
        "avalanche": (0.0, 0.20, 150),
    }),
    "dovet": (2.5e9, 0.0002, 0.012, 0.9, {
        "base": (0.60, 0.50, 0),
        "ethereum": (0.40, 0.50, 0),
    }),
    "ellum": (1.2e9, 0.0005, 0.014, 1.1, {
        "arbitrum": (0.55, 0.40, 0),
        "ethereum": (0.30, 0.35, 0),
        "avalanche": (0.15, 0.25, 0),
    }),
    "fenwick": (0.6e9, 0.0001, 0.018, 0.7, {
        "ethereum": (0.70, 0.65, 0),
        "base": (0.30, 0.35, 0),
    }),
}

FENWICK_MISSING_DAYS = {37, 38, 166, 268}

UTILIZATION_TARGET = {
    "auric": 0.58,
    "breve": 0.95,
    "cairn": 0.85,
    "dovet": 0.64,
    "ellum": 0.72,
    "fenwick": 0.60,
}

PROTOCOL_YIELD_TARGET = {
    "auric": 0.035,
    "breve": 0.081,
    "cairn": 0.062,
    "dovet": 0.041,
    "ellum": 0.048,
    "fenwick": 0.037,
}

# curator -> (base tvl, market beta, vol, fee capture, vault of each pool,
#             pool base weights)
CURATORS = {
    "atlas": (2.0e9, 1.0, 0.011, 0.07, {
        "auric:WETH": ("atlas-core", 0.25),
        "cairn:wstETH": ("atlas-core", 0.15),
        "auric:USDC": ("atlas-core", 0.20),
        "breve:USDC": ("atlas-core", 0.12),
        "ellum:USDT": ("atlas-core", 0.08),
        "dovet:WBTC": ("atlas-plus", 0.13),
        "dovet:tBTC": ("atlas-plus", 0.07),
    }),
    "beacon": (1.3e9, 0.15, 0.006, 0.03, {
        "breve:USDC": ("beacon-prime", 0.42),
        "breve:DAI": ("beacon-prime", 0.25),
        "auric:USDC": ("beacon-prime", 0.10),
        "ellum:USDT": ("beacon-prime", 0.12),
        "ellum:PAXG": ("beacon-prime", 0.02),
        "auric:WETH": ("beacon-prime", 0.09),
    }),
    "citadel": (0.9e9, 0.8, 0.013, 0.10, {
        "dovet:WBTC": ("citadel-one", 0.30),
        "dovet:tBTC": ("citadel-one", 0.18),
        "auric:USDC": ("citadel-one", 0.22),
        "breve:DAI": ("citadel-one", 0.15),
        "auric:WETH": ("citadel-one", 0.15),
    }),
    "drift": (0.5e9, 1.3, 0.019, 0.12, {
        "auric:WETH": ("drift-core", 0.30),
        "cairn:WETH": ("drift-core", 0.25),
        "cairn:wstETH": ("drift-loop", 0.25),
        "breve:USDT": ("drift-core", 0.20),
    }),
    "ember": (0.45e9, 0.2, 0.007, 0.05, {
        "ellum:TBILL": ("ember-vault", 0.30),
        "breve:USDC": ("ember-vault", 0.30),
        "breve:DAI": ("ember-vault", 0.20),
        "ellum:PAXG": ("ember-vault", 0.04),
        "fenwick:XAUT": ("ember-vault", 0.03),
        "auric:USDC": ("ember-vault", 0.13),
    }),
    "forge": (0.7e9, 0.9, 0.012, 0.09, {
        "auric:WETH": ("forge-main", 0.30),
        "dovet:WBTC": ("forge-main", 0.20),
        "auric:USDC": ("forge-main", 0.25),
        "cairn:wstETH": ("forge-main", 0.15),
        "fenwick:WETH": ("forge-main", 0.10),
    }),
    "gale": (0.3e9, 0.6, 0.016, 0.14, {
        "ellum:WETH": ("gale-core", 0.46),
        "fenwick:DAI": ("gale-core", 0.30),
        "fenwick:XAUT": ("gale-core", 0.05),
        "ellum:USDT": ("gale-loop", 0.04),
        "cairn:USDC": ("gale-loop", 0.15),
    }),
}

GALE_START_DAY = 100
CURATOR_FEE_RATE = 0.04
BEACON_VOLATILE_CAP = 0.12

HARBOR_POOLS = {
    "auric:WETH": "harbor-main",
    "auric:USDC": "harbor-main",
    "cairn:wstETH": "harbor-main",
    "breve:USDC": "harbor-main",
}

LIQUIDITY = {
    "USDC": {50: "inf", 100: "inf", 200: "inf"},
    "USDT": {50: "inf", 100: "inf", 200: "inf"},
    "DAI": {50: "inf", 100: "inf", 200: "inf"},
    "WETH": {50: "200000000", 100: "600000000", 200: "1500000000"},
    "wstETH": {50: "100000000", 100: "300000000", 200: "800000000"},
    "WBTC": {50: "120000000", 100: "350000000", 200: "900000000"},
    "tBTC": {50: "20000000", 100: "80000000", 200: "250000000"},
    "PAXG": {50: "10000000", 100: "30000000", 200: "90000000"},
    "XAUT": {50: "8000000", 100: "25000000", 200: "70000000"},
    "TBILL": {50: "0", 100: "50000000", 200: "150000000"},
}

DEPS = [
    ("atlas-core", "auric:WETH", "market_allocation"),
    ("atlas-core", "auric:USDC", "market_allocation"),
    ("atlas-core", "cairn:wstETH", "market_allocation"),
    ("atlas-core", "breve:USDC", "market_allocation"),
    ("atlas-plus", "atlas-core", "meta_vault"),
    ("atlas-plus", "dovet:WBTC", "market_allocation"),
    ("forge-main", "auric:WETH", "market_allocation"),
    ("forge-main", "dovet:WBTC", "market_allocation"),
    ("beacon-prime", "breve:USDC", "market_allocation"),
    ("beacon-prime", "breve:DAI", "market_allocation"),
    ("ember-vault", "ellum:TBILL", "market_allocation"),
    ("harbor-main", "auric:WETH", "market_allocation"),
    ("drift-loop", "gale-loop", "meta_vault"),
    ("gale-loop", "drift-loop", "meta_vault"),
    ("drift-loop", "cairn:wstETH", "market_allocation"),
]


def iso(day_index: int) -> str:
    return (START + timedelta(days=day_index)).isoformat()


def stamp(day_index: int, hour: int, minute: int = 0, second: int = 0) -> str:
    d = START + timedelta(days=day_index)
    return datetime(d.year, d.month, d.day, hour, minute, second, tzinfo=timezone.utc).isoformat()


def growth_paths(rng: np.random.Generator):
    """Log-return paths: one common market factor plus idiosyncratic noise.

    The market loading grows 60% stronger in the second half of the sample
    so late-sample co-movement is visibly denser than early-sample."""
    market = rng.normal(0.0, 0.012, N_DAYS)
    loading = np.where(np.arange(N_DAYS) < N_DAYS // 2, 1.0, 1.6)

    def path(base, drift, vol, beta):
        own = rng.normal(0.0, vol, N_DAYS)
        log_r = drift + beta * loading * market + own
        log_r[0] = 0.0
        return base * np.exp(np.cumsum(log_r))

    return path


def pool_weights(rng: np.random.Generator, name: str, spec: dict) -> dict[str, np.ndarray]:
    """Smooth per-pool weight paths, normalized daily."""
    t = np.arange(N_DAYS)
    raw = {}
    for k, (pool, (_vault, base)) in enumerate(sorted(spec.items())):
        phase = rng.uniform(0, 2 * math.pi)
        cycles = rng.uniform(0.5, 2.0)
        wobble = 1.0 + 0.25 * np.sin(2 * math.pi * cycles * t / N_DAYS + phase)
        wobble += rng.normal(0, 0.02, N_DAYS)
        raw[pool] = np.maximum(base * wobble, 0.05 * base)
    if name == "beacon":
        # hard cap on the lone volatile pool keeps the stable profile honest
        raw["auric:WETH"] = np.minimum(raw["auric:WETH"], BEACON_VOLATILE_CAP)
    total = sum(raw.values())
    return {pool: w / total for pool, w in raw.items()}


def build_rows():
    rng = np.random.default_rng(SEED)
    path = growth_paths(rng)

    tvl_rows = []
    loans_rows = []
    fees_rows = []

    for proto in sorted(PROTOCOLS):
        base, drift, vol, beta, chains = PROTOCOLS[proto]
        totals = path(base, drift, vol, beta)
        util_noise = rng.normal(0, 0.02, N_DAYS)
        fee_noise = rng.normal(0, 0.15, N_DAYS)
        for i in range(N_DAYS):
            if proto == "fenwick" and i in FENWICK_MISSING_DAYS:
                continue
            frac = i / (N_DAYS - 1)
            weights = {}
            for chain, (w0, w1, activation) in chains.items():
                if i < activation:
                    continue
                weights[chain] = w0 + (w1 - w0) * frac
            norm = sum(weights.values())
            day_total = 0.0
            for chain in sorted(weights):
                slice_usd = round(totals[i] * weights[chain] / norm, 2)
                day_total += slice_usd
                tvl_rows.append(("protocol", proto, chain, iso(i), f"{slice_usd:.2f}"))
            util = UTILIZATION_TARGET[proto] * (1 + util_noise[i])
            loans_rows.append(("protocol", proto, iso(i), f"{round(day_total * util, 2):.2f}"))
            gross = round(day_total * PROTOCOL_YIELD_TARGET[proto] / 365 * (1 + fee_noise[i]), 2)
            gross = max(gross, 0.0)
            retained = round(gross * 0.10, 2)
            fees_rows.append(("protocol", proto, iso(i), f"{gross:.2f}", f"{retained:.2f}"))

    position_rows = []
    atlas_amounts: dict[tuple[int, str], float] = {}

    for curator in sorted(CURATORS):
        base, beta, vol, capture, spec = CURATORS[curator]
        totals = path(base, 0.0003, vol, beta)
        weights = pool_weights(rng, curator, spec)
        fee_noise = rng.normal(0, 0.15, N_DAYS)
        start_day = GALE_START_DAY if curator == "gale" else 0
        for i in range(start_day, N_DAYS):
            for pool in sorted(spec):
                vault = spec[pool][0]
                amount = round(float(totals[i] * weights[pool][i]), 2)
                if amount <= 0:
                    continue
                proto, asset = pool.split(":")
                position_rows.append(
                    (iso(i), curator, vault, pool, CHAIN_OF[proto], asset, f"{amount:.2f}")
                )
                if curator == "atlas":
                    atlas_amounts[(i, pool)] = amount
            gross = round(float(totals[i]) * CURATOR_FEE_RATE / 365 * (1 + fee_noise[i]), 2)
            gross = max(gross, 0.0)
            retained = round(capture * gross, 2)
            fees_rows.append(("curator", curator, iso(i), f"{gross:.2f}", f"{retained:.2f}"))

    # harbor mirrors a slice of atlas pool-by-pool; the ratio wanders but
    # stays far below 1 so nesting (and overlap weight 1.0) holds every day
    harbor_totals = []
    for i in range(N_DAYS):
        ratio = 0.12 + 0.04 * math.sin(2 * math.pi * i / N_DAYS)
        day_total = 0.0
        for pool in sorted(HARBOR_POOLS):
            parent = atlas_amounts[(i, pool)]
            amount = round(parent * ratio, 2)
            assert 0 < amount < parent
            proto, asset = pool.split(":")
            position_rows.append(
                (iso(i), "harbor", HARBOR_POOLS[pool], pool, CHAIN_OF[proto], asset, f"{amount:.2f}")
            )
            day_total += amount
        harbor_totals.append(day_total)
    harbor_fee_noise = rng.normal(0, 0.15, N_DAYS)
    for i in range(N_DAYS):
        gross = round(harbor_totals[i] * CURATOR_FEE_RATE / 365 * (1 + harbor_fee_noise[i]), 2)
        gross = max(gross, 0.0)
        fees_rows.append(("curator", "harbor", iso(i), f"{gross:.2f}", f"{round(0.08 * gross, 2):.2f}"))

    event_rows = []
    for i in range(N_DAYS):
        event_rows.append(
            (stamp(i, 8), "curator", "ember", "attestation", '{"signer": "oracle-12"}')
        )
    for i in range(0, N_DAYS, 7):
        event_rows.append(
            (stamp(i, 12), "curator", "atlas", "attestation", '{"signer": "attest-svc-7"}')
        )

    shock_days = [50, 120, 190, 260, 330]
    change_lags = [3600, 7200, 7200, 10800, None]  # median of matched lags: 7200
    for day, lag in zip(shock_days, change_lags):
        event_rows.append((stamp(day, 14), "curator", "atlas", "shock", '{"kind": "depeg"}'))
        if lag is not None:
            base_dt = datetime(
                (START + timedelta(days=day)).year,
                (START + timedelta(days=day)).month,
                (START + timedelta(days=day)).day,
                14,
                tzinfo=timezone.utc,
            )
            change_dt = base_dt + timedelta(seconds=lag)
            event_rows.append(
                (change_dt.isoformat(), "curator", "atlas", "param_change", '{"param": "ltv"}')
            )
        else:
            # a change exists but falls outside the 7-day match window
            late = datetime(
                (START + timedelta(days=day + 9)).year,
                (START + timedelta(days=day + 9)).month,
                (START + timedelta(days=day + 9)).day,
                14,
                tzinfo=timezone.utc,
            )
            event_rows.append((late.isoformat(), "curator", "atlas", "param_change", '{"param": "cap"}'))
    for day in (80, 240):
        event_rows.append((stamp(day, 9), "curator", "drift", "shock", '{"kind": "outflow"}'))

    # exact cohort approval rates: retail 18/25 = 0.72, institutional 17/20 = 0.85
    for k in range(300):
        outcome = "approve" if k % 25 < 18 else "reject"
        payload = json.dumps({"cohort": "retail", "outcome": outcome})
        event_rows.append((stamp(30 + k, 10), "curator", "atlas", "credit_decision", payload))
    for k in range(80):
        outcome = "approve" if k % 20 < 17 else "reject"
        payload = json.dumps({"cohort": "institutional", "outcome": outcome})
        event_rows.append((stamp(40 + k * 4, 11), "curator", "atlas", "credit_decision", payload))

    liquidity_rows = [
        (asset, str(bps), depth)
        for asset in sorted(LIQUIDITY)
        for bps, depth in sorted(LIQUIDITY[asset].items())
    ]

    classification = {
        "assets": {
            asset: {"class": cls, "family": family, "issuer": issuer}
            for asset, (cls, family, issuer) in sorted(ASSETS.items())
        },
        "default_policy": "strict",
    }

    return {
        "tvl": sorted(tvl_rows),
        "positions": sorted(position_rows),
        "loans": sorted(loans_rows),
        "fees": sorted(fees_rows),
        "events": sorted(event_rows),
        "liquidity": liquidity_rows,
        "deps": sorted(DEPS),
        "classification": classification,
    }


HEADERS = {
    "tvl": ["entity_kind", "entity_name", "chain", "date", "tvl_usd"],
    "positions": ["date", "curator", "vault", "pool", "chain", "asset", "amount_usd"],
    "loans": ["entity_kind", "entity_name", "date", "active_loans_usd"],
    "fees": ["entity_kind", "entity_name", "date", "gross_fees_usd", "retained_revenue_usd"],
    "events": ["timestamp", "entity_kind", "entity_name", "kind", "payload"],
    "liquidity": ["asset", "slippage_bps", "depth_usd"],
    "deps": ["from_vault", "to_target", "kind"],
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).parent / "data"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    tables = build_rows()
    for table, header in HEADERS.items():
        with open(out / f"{table}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(tables[table])
    (out / "classification.json").write_text(
        json.dumps(tables["classification"], indent=2) + "\n", encoding="utf-8"
    )
    total = sum(len(tables[t]) for t in HEADERS)
    print(f"wrote {total} rows across {len(HEADERS) + 1} files to {out}")


if __name__ == "__main__":
    main()
