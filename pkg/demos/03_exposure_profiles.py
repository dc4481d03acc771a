"""Curator portfolio composition by asset class over time.
=========================================================

Shares are curated-TVL fractions per class (volatile, stable, commodity,
rwa) and always partition to one. The fixture's ``beacon`` is built as a
stable-heavy liquidity anchor whose volatile share never reaches 0.2,
while ``drift`` runs a high-beta book.
"""

from pathlib import Path

from vaultscope.data import AssetClass, EntityId, EntityKind, load_dataset
from vaultscope.exposure import class_share, curator_tvl_shares, exposure_panel

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "data"
dataset = load_dataset(FIXTURE)
last = dataset.last_date()

print("class shares on the last day:")
print(f"  {'curator':8s} {'volatile':>9s} {'stable':>9s} {'commodity':>10s} {'rwa':>7s}")
for curator in dataset.curators():
    positions = dataset.positions_for(curator, last)
    row = [
        class_share(positions, dataset.classification, cls)
        for cls in (AssetClass.volatile, AssetClass.stable, AssetClass.commodity, AssetClass.rwa)
    ]
    print(f"  {curator.name:8s} {row[0]:9.1%} {row[1]:9.1%} {row[2]:10.1%} {row[3]:7.1%}")

# The defensive outlier: beacon's volatile share across the whole sample.
beacon = EntityId(EntityKind.curator, "beacon")
vols = [
    class_share(dataset.positions_for(beacon, d), dataset.classification, AssetClass.volatile)
    for d in dataset.position_dates()
]
print(f"\nbeacon volatile share: min {min(vols):.1%}, max {max(vols):.1%} "
      f"(stays below 20% by construction)")

# Panel rows are plot-ready (date, curator, class, share) tuples.
panel = exposure_panel(dataset)
print(f"\nexposure panel: {len(panel.rows)} rows, "
      f"{panel.skipped_zero_total} zero-TVL curator-days skipped")

print(f"\nshare of curated TVL on {last}:")
for curator, share in sorted(curator_tvl_shares(dataset, last).items(), key=lambda kv: -kv[1]):
    print(f"  {curator.name:8s} {share:6.1%}")
