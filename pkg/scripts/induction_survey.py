#!/usr/bin/env python3
"""Random induction and product instances: multiplicity sets side by side."""
import argparse

import numpy as np

from cfflows import induced


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print("induction: G, [G:H], dim V, M(V), M(Ind V)")
    for _ in range(args.n):
        inst = induced.random_induction_instance(rng)
        r = induced.check_prop11(inst.V, inst.group, inst.H)
        flag = "" if r.ok else "  <-- mismatch"
        print(f"  {str(inst.group):<14} {r.index:>2} {r.dim_v:>2}  {r.set_v} {r.set_u}{flag}")

    print("product: M(T1), M(T2), #orbits(T2), M(T1 x T2)")
    for _ in range(args.n):
        rep = induced.product_multiplicity_check(induced.random_ergodic_simple(rng), induced.random_action(rng))
        print(f"  {rep.m1} {rep.m2} {rep.t2_orbits} {rep.product}  ergodic-T2 fact: {rep.fact_holds}")


if __name__ == "__main__":
    main()
