#!/usr/bin/env python3
"""Estimation comparison: Frobenius error to the true precision matrix along
a shared penalty grid, for the convex estimator and Sparse DAG."""

import argparse

from cscs.cli import write_report
from cscs.experiments import frobenius_path_experiment
from cscs.rowsolver import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=50)
    ap.add_argument("--n", type=int, default=25)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--zero-fraction", type=float, default=0.98)
    ap.add_argument("--grid-count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epsilon", type=float, default=1e-6)
    ap.add_argument("--r-max", type=int, default=300)
    ap.add_argument("--out", default=None, help="JSON output path")
    args = ap.parse_args()

    result = frobenius_path_experiment(
        p=args.p,
        n=args.n,
        reps=args.reps,
        zero_fraction=args.zero_fraction,
        grid_count=args.grid_count,
        seed=args.seed,
        cfg=SolverConfig(epsilon=args.epsilon, r_max=args.r_max),
    )
    if args.out:
        write_report(args.out, result)
        print(f"wrote {args.out}")
    print(f"{'lambda':>12s}  {'cscs':>10s}  {'sparse-dag':>10s}")
    for lam, ec, ed in zip(
        result["grid"], result["mean_error"]["cscs"], result["mean_error"]["sparse-dag"]
    ):
        print(f"{lam:12.5f}  {ec:10.4f}  {ed:10.4f}")
    print(
        f"\nbest mean error: cscs {result['min_mean_error']['cscs']:.4f}  "
        f"sparse-dag {result['min_mean_error']['sparse-dag']:.4f}"
    )


if __name__ == "__main__":
    main()
