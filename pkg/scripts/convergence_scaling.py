#!/usr/bin/env python3
"""Iterations-to-target over an (n, d) grid, relative to the scaling law.

Full-data streams from random starts: per cell, the mean and spread of
K / (d^2 log n + d log(1/(1 - zeta*))). The ratio sitting below 1 with
small variance across cells is the scaling-law check.

Example:
    python3 scripts/convergence_scaling.py --ns 100 300 1000 --ds 5 10
"""

import argparse
import math
import sys

from grassmann_stream import harness


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", type=int, nargs="+", default=[100, 300, 1000])
    ap.add_argument("--ds", type=int, nargs="+", default=[5, 10])
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--zeta-star", type=float, default=1 - 1e-4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    base = harness.TrialConfig(
        n=args.ns[0], d=args.ds[0], op_kind="full",
        zeta_star=args.zeta_star, max_iters=200_000, seed=args.seed,
        diagnostics_level="none",
    )
    grid = [(n, d, None) for n in args.ns for d in args.ds]

    def bound_fn(n, d, m):
        return d**2 * math.log(n) + d * math.log(1.0 / (1.0 - args.zeta_star))

    cells = harness.sweep(base, grid, args.trials, bound_fn, jobs=args.jobs)
    print("n,d,mean_ratio,var_ratio,fail_frac")
    for c in cells:
        print(f"{c.n},{c.d},{c.mean_ratio:.17g},{c.var_ratio:.17g},{c.fail_frac}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
