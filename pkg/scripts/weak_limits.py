#!/usr/bin/env python3
"""Print weak-limit residual tables for the Z/3 witness along labelled levels."""
import argparse

from cfflows.abelian import characters, z3_witness
from cfflows.cftower import build_schedule_sec4, build_schedule_sec5
from cfflows.cocycle import build_table
from cfflows.koopman import target_half, target_scalar, weak_limit_table

CASES = {
    "N": ("sec4", ["W1", "W2", "N(1)", "N(1)", "N(1)"], lambda L: L.kind == "N"),
    "W1": ("sec4", ["W2", "W1", "W1", "W1", "W2"], lambda L: L.kind == "W" and L.i == 1),
    "W2": ("sec4", ["W1", "W2", "W2", "W2", "W1"], lambda L: L.kind == "W" and L.i == 2),
    "M1": ("sec5", ["M(0;1)", "M(1;1)", "M(1;1)", "M(1;1)", "M(0;2)"], lambda L: L.kind == "M" and L.a == (1,)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("case", choices=sorted(CASES))
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--chi", type=int, default=1)
    ap.add_argument("--j", type=int, default=1, help="time multiple for M levels")
    args = ap.parse_args()

    gd = z3_witness()
    chi = characters(gd.group)[args.chi]
    variant, assignment, pred = CASES[args.case]
    build = build_schedule_sec4 if variant == "sec4" else build_schedule_sec5
    sch = build(gd, args.depth, assignment)
    tab = build_table(sch, gd)
    target = target_scalar(gd, chi) if args.case == "N" else target_half(sch, gd, chi, args.j)
    rows = weak_limit_table(sch, tab, gd, chi, pred, target, multiple=args.j)
    print(f"{variant} {assignment} chi={chi}")
    print(f"{'n':>3} {'residual':>10} {'deficiency':>11}  target")
    for r in rows:
        print(f"{r.n:>3} {r.residual:>10.5f} {r.error:>11.2e}  {r.target}")


if __name__ == "__main__":
    main()
