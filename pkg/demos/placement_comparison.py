"""Compare placement strategies on a random arrival sequence.

Builds bundles for a few memory-bound NFs, streams random arrivals
through greedy and contention-aware placement, and scores both fleets
with the ground-truth simulator.

Usage: python3 demos/placement_comparison.py [--arrivals 24] [--seed 0]
"""

import argparse
import time

import numpy as np

from nicperf.apps import (
    NfInstance,
    PlacementStrategy,
    SlaSpec,
    evaluate_placement,
    place_sequence,
)
from nicperf.catalog import ATTRIBUTE_RANGES, SimulatorRunner, get_nf
from nicperf.core import TrafficProfile
from nicperf.predictor import build
from nicperf.profiler import ProfilingConfig

NF_NAMES = ("flowstats", "nat", "iptunnel", "flowclassifier")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--arrivals", type=int, default=24)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    config = ProfilingConfig(
        attributes=tuple((n, lo, hi) for n, (lo, hi) in ATTRIBUTE_RANGES.items()),
        quota=200,
        seed=0,
    )
    bundles = {}
    t0 = time.time()
    for name in NF_NAMES:
        bundles[name] = build(name, config, SimulatorRunner(get_nf(name)))
    print(f"built {len(bundles)} bundles in {time.time() - t0:.1f}s")

    rng = np.random.default_rng(args.seed)
    arrivals = []
    for i in range(args.arrivals):
        name = NF_NAMES[rng.integers(len(NF_NAMES))]
        arrivals.append(NfInstance(
            instance_id=f"{name}-{i}",
            predictor=bundles[name],
            traffic=TrafficProfile(flow_count=int(rng.integers(1, 500_001))),
            sla=SlaSpec(float(rng.uniform(0.05, 0.20))),
        ))

    print(f"\nplacing {len(arrivals)} arrivals "
          f"(SLA: 5-20% tolerated throughput drop):")
    for strategy in (PlacementStrategy.MONOPOLIZATION,
                     PlacementStrategy.GREEDY,
                     PlacementStrategy.CONTENTION_AWARE):
        fleet = place_sequence(arrivals, strategy)
        report = evaluate_placement(fleet)
        print(f"  {strategy.value:17s} NICs: {report.nic_count:3d}  "
              f"SLA violations: {len(report.violating_instances):2d} "
              f"({report.violation_pct:.1f}%)")


if __name__ == "__main__":
    main()
