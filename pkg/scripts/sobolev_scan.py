#!/usr/bin/env python3
"""Tabulate the normalized functional quotient over conformal families of the weighted sphere."""

import argparse

from wsigma.geometry import build_model
from wsigma.solver import sobolev_scan, standard_families


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--m", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    base = build_model("weighted-sphere", args.n, args.m, 400)
    print("family        parameter   ratio                 kappa       excluded")
    for r in sobolev_scan(base, args.k, standard_families(base, seed=args.seed)):
        print(f"{r.family:12s}  {r.parameter:9.4f}   {r.ratio:.15f}   {r.kappa:9.5f}   "
              f"{'yes (' + str(r.cone_nodes_failed) + ' nodes)' if r.excluded else 'no'}")


if __name__ == "__main__":
    main()
