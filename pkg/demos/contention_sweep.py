"""Sweep memory and accelerator contention against one NF and print the
resulting throughput surface, straight from the ground-truth simulator.

Usage: python3 demos/contention_sweep.py [--nf flowmonitor]
"""

import argparse

import numpy as np

from nicperf.catalog import SimulatorRunner, get_nf
from nicperf.core import DEFAULT_TRAFFIC, ResourceKind


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nf", default="flowmonitor")
    args = ap.parse_args()

    runner = SimulatorRunner(get_nf(args.nf), seed=0)
    solo = runner.solo_throughput(DEFAULT_TRAFFIC)
    print(f"{args.nf}: solo throughput {solo / 1e3:.1f} Kpps at default traffic")

    print("\nmemory contention (CAR level = WSS level):")
    for level in np.linspace(0.0, 1.0, 6):
        levels = {ResourceKind.MEMORY: float(level)} if level > 0 else {}
        t = runner.throughput(DEFAULT_TRAFFIC, levels)
        bar = "#" * int(40 * t / solo)
        print(f"  level {level:.1f}  {t / 1e3:8.1f} Kpps  {bar}")

    if ResourceKind.REGEX_ACCEL in get_nf(args.nf).resources:
        print("\nregex accelerator contention (saturating bench at level 1):")
        for level in np.linspace(0.0, 1.0, 6):
            levels = {ResourceKind.REGEX_ACCEL: float(level)} if level > 0 else {}
            result = runner.run(DEFAULT_TRAFFIC, levels)
            t = result.per_nf_throughput[args.nf]
            bn = result.bottleneck[args.nf].value
            print(f"  level {level:.1f}  {t / 1e3:8.1f} Kpps  bottleneck: {bn}")


if __name__ == "__main__":
    main()
