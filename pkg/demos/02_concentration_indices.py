"""Concentration indices: chains, risk-factor families, issuers.
===============================================================

HHI on [0, 1]: 1.0 means everything sits in one bucket, 1/n a uniform
spread over n occupied buckets. The same kernel powers three views:
execution-layer concentration (TVL by chain), factor concentration
(tokens aggregated into risk families before squaring), and per-issuer
concentration for the disclosure bundle.
"""

from datetime import timedelta
from pathlib import Path

from vaultscope.concentration import chain_hhi, factor_hhi, issuer_concentration
from vaultscope.data import EntityKind, load_dataset

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "data"
dataset = load_dataset(FIXTURE)
last = dataset.last_date()
first = last - timedelta(days=399)

# Chain concentration drifts down as protocols roll out to more chains;
# the single-chain protocol (breve) stays pinned at 1.0.
print("chain HHI, first vs last day:")
for protocol in dataset.tvl_entities(EntityKind.protocol):
    series = dataset.tvl_series(protocol)
    start_point = chain_hhi(dataset, protocol, series.points[0][0])
    end_point = chain_hhi(dataset, protocol, series.points[-1][0])
    print(f"  {protocol.name:8s} {start_point.hhi:.3f} ({start_point.n_buckets} chains)"
          f"  ->  {end_point.hhi:.3f} ({end_point.n_buckets} chains)")

# Factor HHI collapses WETH and wstETH into one ETH bucket, both BTC
# wrappers into one, and all USD stables into one.
print("\nfactor HHI on the last day (tokens grouped into risk families):")
for curator in dataset.curators():
    positions = dataset.positions_for(curator, last)
    if not positions:
        continue
    point = factor_hhi(positions, dataset.classification)
    print(f"  {curator.name:8s} {point.hhi:.3f} over {point.n_buckets} families")

# Issuer concentration for one curator, the disclosure-bundle view.
atlas = next(c for c in dataset.curators() if c.name == "atlas")
conc = issuer_concentration(
    dataset.positions_for(atlas, last), top_n=3, classification=dataset.classification
)
print(f"\natlas issuer concentration: HHI {conc.hhi:.3f}, top issuers:")
for issuer, share in conc.top:
    print(f"  {issuer:14s} {share:6.1%}")
