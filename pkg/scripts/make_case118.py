#!/usr/bin/env python3
"""Regenerate the bundled 118-bus case (data/case118.txt).

The authoritative IEEE 118-bus branch tables are not redistributable here,
so the bundled case is generated procedurally with a fixed seed: 118 buses,
186 branches (a random spanning tree plus chords, guaranteed connected),
54 generator records at the customary 118-bus generator buses, and an
hourly load shape scaled to a 4242 MW daily peak.  Three of the generator
buses (10, 69, 89) carry wind sites instead of thermal units, so the GEN
table has 51 rows.

Structural properties (bus/branch/generator counts, connectivity, load
scale) are what the test suite relies on; the electrical parameters are
plausible rather than historical.

Run:  python scripts/make_case118.py > data/case118.txt
"""
import sys

import numpy as np

GEN_BUSES = [
    1, 4, 6, 8, 10, 12, 15, 18, 19, 24, 25, 26, 27, 31, 32, 34, 36, 40, 42,
    46, 49, 54, 55, 56, 59, 61, 62, 65, 66, 69, 70, 72, 73, 74, 76, 77, 80,
    85, 87, 89, 90, 91, 92, 99, 100, 103, 104, 105, 107, 110, 111, 112, 113,
    116,
]
WIND_BUSES = {10: "site_3560", 69: "site_16238", 89: "site_15414"}
N_BUS = 118
N_BRANCH = 186
PEAK_LOAD = 4242.0
SEED = 118


def hourly_shape():
    h = np.arange(24)
    shape = 0.72 + 0.2 * np.exp(-((h - 18.5) ** 2) / 14.0) + 0.12 * np.exp(
        -((h - 9.0) ** 2) / 18.0) - 0.08 * np.exp(-((h - 3.5) ** 2) / 8.0)
    return shape / shape.max()


def main(out=sys.stdout):
    rng = np.random.default_rng(SEED)
    shape = hourly_shape()

    # loads: roughly 85% of buses carry load, lognormal sizes, peak-normalized
    has_load = rng.random(N_BUS) < 0.85
    weights = np.where(has_load, rng.lognormal(0.0, 0.7, N_BUS), 0.0)
    weights *= PEAK_LOAD / weights.sum()
    loads = np.outer(weights, shape)

    # topology: random spanning tree + chords biased toward nearby indices
    edges = set()
    order = rng.permutation(N_BUS) + 1
    for k in range(1, N_BUS):
        a = order[k]
        b = order[rng.integers(0, k)]
        edges.add((min(a, b), max(a, b)))
    while len(edges) < N_BRANCH:
        a = int(rng.integers(1, N_BUS + 1))
        span = int(rng.integers(1, 12))
        b = a + span if a + span <= N_BUS else a - span
        if a != b:
            edges.add((min(a, b), max(a, b)))
    branches = sorted(edges)

    print(f"# Procedurally generated 118-bus case (scripts/make_case118.py, seed {SEED}).", file=out)
    print(f"CASE T=24 SHED_PENALTY=5000.0 BASE_MVA=100.0", file=out)
    print("BUS", file=out)
    for i in range(N_BUS):
        vals = " ".join(f"{v:.4f}" for v in loads[i])
        print(f"{i + 1} {vals}", file=out)
    print("BRANCH", file=out)
    for a, b in branches:
        x = round(float(rng.uniform(0.02, 0.25)), 4)
        cap = float(rng.choice([300.0, 400.0, 500.0, 600.0]))
        print(f"{a} {b} {x} {-cap} {cap}", file=out)
    print("GEN", file=out)
    total_cap = 0.0
    for bus in GEN_BUSES:
        if bus in WIND_BUSES:
            continue
        pmax = round(float(rng.uniform(60.0, 320.0)), 1)
        pmin = round(pmax * float(rng.uniform(0.05, 0.25)), 1)
        a = round(float(rng.uniform(150.0, 600.0)), 1)
        b = round(float(rng.uniform(15.0, 42.0)), 2)
        c = round(float(rng.uniform(0.005, 0.08)), 4)
        ramp = round(pmax * 0.5, 1)
        start = round(pmax * 0.8, 1)
        print(f"{bus} {pmin} {pmax} {a} {b} {c} {ramp} {ramp} {start} {start}", file=out)
        total_cap += pmax
    print("RENEWABLE", file=out)
    for bus, label in sorted(WIND_BUSES.items()):
        print(f"{bus} {label} 150.0", file=out)
    print(f"# total thermal capacity {total_cap:.1f} MW vs peak load {PEAK_LOAD} MW",
          file=out)


if __name__ == "__main__":
    main()
