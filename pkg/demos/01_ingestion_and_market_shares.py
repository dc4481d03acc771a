"""Loading a snapshot dataset, validating it, and computing market shares.
=========================================================================

The engine consumes CSV/JSON snapshot files, never live endpoints. This
walkthrough loads the bundled 400-day fixture, shows how calendar
alignment policies differ, and splits total lending TVL by protocol.
"""

from pathlib import Path

from vaultscope.data import EntityKind, align_calendar, load_dataset, market_share

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "data"

dataset = load_dataset(FIXTURE)
print(f"tables: {len(dataset.tvl)} tvl rows, {len(dataset.positions)} positions, "
      f"{len(dataset.events)} events")

# Every protocol's TVL series sums across chains per day. fenwick has four
# deliberately missing days; the two alignment policies treat them differently.
protocols = dataset.tvl_entities(EntityKind.protocol)
fenwick = next(p for p in protocols if p.name == "fenwick")
raw = dataset.tvl_series(fenwick)

dropped = align_calendar(raw, "drop_gaps")
filled = align_calendar(raw, "forward_fill")
print(f"\nfenwick: {len(raw.points)} observed days, {dropped.gap_count} missing")
print(f"forward_fill emits {len(filled.series.points)} days "
      f"(span first..last, carrying the last observed value)")

# Market share of total lending TVL on the final day.
last = dataset.last_date()
shares = market_share([dataset.tvl_series(p) for p in protocols], last)
print(f"\nmarket share of lending TVL on {last}:")
for entity, share in sorted(shares.items(), key=lambda kv: -kv[1]):
    bar = "#" * round(share * 50)
    print(f"  {entity.name:8s} {share:6.1%}  {bar}")
print(f"  (sums to {sum(shares.values()):.12f})")
