"""Replay one workload against every replacement policy across a range
of cache sizes.

Run with: python3 demos/policy_faceoff.py
"""

from zipfcache.analytic import DAY, hit_scaling
from zipfcache.simcore import CacheConfig, simulate
from zipfcache.trace import REQUEST, SyntheticSpec, generate_trace

spec = SyntheticSpec(
    n_objects=20_000,
    alpha=0.8,
    request_rate=100_000 / (30 * DAY),
    duration=30 * DAY,
    mean_doc_size=10_000.0,
    size_spread=1.0,
    mu_p=1.0 / (20 * DAY),
    mu_u=1.0 / (200 * DAY),
    popular_boundary=1_000,
    seed=7,
)
events = generate_trace(spec)

seen = {}
for e in events:
    if e.kind == REQUEST and e.object_id not in seen:
        seen[e.object_id] = e.size_bytes
footprint = sum(seen.values())
print(f"{len(events)} events over {len(seen)} documents, "
      f"footprint {footprint / 1e6:.0f} MB")

fractions = (0.05, 0.10, 0.20, 0.40)
policies = ("fifo", "lru", "lfu", "zbs", "zbs-byte")
print()
print(f"{'capacity':>10}", *(f"{p:>9}" for p in policies))
results = {}
for frac in fractions:
    capacity = round(frac * footprint)
    row = []
    for pid in policies:
        report = simulate(events, CacheConfig(capacity_bytes=capacity, policy_id=pid))
        results[pid, frac] = report
        row.append(report.hit_ratio)
    print(f"{frac:>9.0%}", *(f"{h:>9.4f}" for h in row))

print()
zo = results["zbs", 0.10]
zb = results["zbs-byte", 0.10]
print(f"at 10% the byte metric gives up object hits ({zo.hit_ratio:.4f} to "
      f"{zb.hit_ratio:.4f}) while")
print(f"byte hit ratios stay close ({zo.byte_hit_ratio:.4f} vs "
      f"{zb.byte_hit_ratio:.4f}): it shields large documents,")
print("which only pays off when size correlates with byte traffic")

print()
h1 = results["zbs", 0.10].hit_ratio
predicted = hit_scaling(h1, 0.10 * footprint, 0.40 * footprint, spec.alpha)
print(f"power-law scaling from the 10% point predicts "
      f"H={predicted:.4f} at 40%, measured {results['zbs', 0.40].hit_ratio:.4f}")
print("the law extrapolates a mid-range trend; expect drift near saturation")
