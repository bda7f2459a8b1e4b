#!/usr/bin/env python3
"""Lower bounds against eigenvalues on a lambda grid; optional CSV output."""
import argparse
import csv

import numpy as np

from cfflows.abelian import z3_witness
from cfflows.cftower import build_schedule_sec4
from cfflows.cocycle import build_table
from cfflows.koopman import eigenvalue_absence_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=5)
    ap.add_argument("--lo", type=float, default=-10.0)
    ap.add_argument("--hi", type=float, default=10.0)
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--csv")
    args = ap.parse_args()

    gd = z3_witness()
    sch = build_schedule_sec4(gd, args.depth)
    grid = np.round(np.arange(args.lo, args.hi + args.step / 2, args.step), 10)
    grid = grid[grid != 0]
    probe = eigenvalue_absence_probe(grid, sch, build_table(sch, gd), gd)
    k = int(np.argmin(probe.lower_bounds))
    print(f"levels n = {probe.levels}; {grid.size} lambdas")
    print(f"min lower bound {probe.lower_bounds[k]:.5f} at lambda = {grid[k]:.4f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "lower_bound"])
            w.writerows((f"{x:.6f}", f"{y:.8f}") for x, y in zip(grid, probe.lower_bounds))


if __name__ == "__main__":
    main()
