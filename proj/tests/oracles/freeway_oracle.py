#!/usr/bin/env python3
"""Brute-force trajectory of a 3-cell mainline with a metered 2-cell on-ramp.

Two vehicle classes: 0 enters at the mainline source, 1 through the ramp.
Both leave at the mainline sink. Writes freeway_trajectory.csv.
"""
import csv
import math
import sys

STEPS = 100
GAMMA, ZETA = 1.0, 1.0

# mainline: 3 cells of 0.025 km, 1 veh/s capacity, 150 veh/km jam, w/v = 1/3
Q_M, JAM_M, WV_M = 1.0, 150 * 0.025, 30 / 90
# on-ramp: 2 cells of 1/60 km, 0.5 veh/s, w/v = 1/3
Q_R, JAM_R, WV_R = 0.5, 150 / 60, 20 / 60


def offer_main(t):
    return 0.9 + 0.5 * math.sin(t / 9.0) if t < 80 else 0.0


def offer_ramp(t):
    return 0.45 + 0.3 * math.cos(t / 6.0) if t < 80 else 0.0


def downstream(t):
    return 0.35 if 35 <= t < 65 else 1.0


def meter(t):
    return 0.3 if 20 <= t < 50 else 1.0


def clamp0(x):
    return max(0.0, x)


def main(path):
    n = [0.0] * 3          # mainline counts
    r = [0.0] * 2          # ramp counts
    mc = [[0.0, 0.0] for _ in range(3)]  # mainline class mix per cell
    rc = [[0.0, 0.0] for _ in range(2)]
    rows = []
    for t in range(STEPS):
        # boundaries
        sup_m = clamp0(min(WV_M * (JAM_M - n[0]), Q_M))
        inflow = min(offer_main(t), sup_m)
        dem_m = clamp0(min(n[2], Q_M))
        outflow = min(dem_m, downstream(t))
        held = mc[2][0] + mc[2][1]
        out_mix = [outflow * mc[2][p] / held if held > 0 else 0.0 for p in range(2)]
        sup_r = clamp0(min(WV_R * (JAM_R - r[0]), Q_R))
        rin = min(offer_ramp(t), sup_r)

        # ramp internal move and merge
        fr = clamp0(min(r[0], WV_R * (JAM_R - r[1]), Q_R))
        avail = r[1] + fr
        cap = meter(t) * min(Q_R, Q_M)
        R = clamp0(min(avail, ZETA * (JAM_M - n[1]), cap))
        moved_r = [fr / r[0] * rc[0][p] if r[0] > 0 else 0.0 for p in range(2)]
        merged = [R / avail * (rc[1][p] + moved_r[p]) if avail > 0 else 0.0 for p in range(2)]

        # mainline moves
        f0 = clamp0(min(n[0], WV_M * (JAM_M - n[1] - GAMMA * R), Q_M))
        f1 = clamp0(min(n[1] + GAMMA * R, WV_M * (JAM_M - n[2]), Q_M))
        moved0 = [f0 / n[0] * mc[0][p] if n[0] > 0 else 0.0 for p in range(2)]
        pool1 = [mc[1][p] + GAMMA * merged[p] for p in range(2)]
        tot1 = n[1] + GAMMA * R
        moved1 = [f1 / tot1 * pool1[p] if tot1 > 0 else 0.0 for p in range(2)]

        # new state
        n = [clamp0(n[0] + inflow - f0), clamp0(n[1] + f0 + R - f1), clamp0(n[2] + f1 - outflow)]
        r = [clamp0(r[0] + rin - fr), clamp0(r[1] + fr - R)]
        mc = [
            [clamp0(mc[0][p] + (inflow if p == 0 else 0.0) - moved0[p]) for p in range(2)],
            [clamp0(mc[1][p] + moved0[p] + merged[p] - moved1[p]) for p in range(2)],
            [clamp0(mc[2][p] + moved1[p] - out_mix[p]) for p in range(2)],
        ]
        rc = [
            [clamp0(rc[0][p] + (rin if p == 1 else 0.0) - moved_r[p]) for p in range(2)],
            [clamp0(rc[1][p] + moved_r[p] - merged[p]) for p in range(2)],
        ]
        rows.append([t + 1, *n, *r, mc[0][0], mc[0][1], mc[1][0], mc[1][1], mc[2][0], mc[2][1],
                     rc[0][0], rc[0][1], rc[1][0], rc[1][1], f0, f1, R])

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "m0", "m1", "m2", "r0", "r1", "m0p0", "m0p1", "m1p0", "m1p1", "m2p0", "m2p1",
                    "r0p0", "r0p1", "r1p0", "r1p1", "f0", "f1", "R"])
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "freeway_trajectory.csv")
