"""Cluster-boundary histograms on Example 3 (100 reps), next to the sweep-predicted optimal cuts.

    python scripts/run_histogram.py --out results/example3
"""
import argparse
import os

import numpy as np

from ncutlab.experiments import run_boundary_histogram, write_histogram


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--k", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results/example3")
    args = ap.parse_args()

    res = run_boundary_histogram("example3", ("knn", "r"), n=args.n, reps=args.reps, k=args.k,
                                 base_seed=args.seed, threads=args.threads)
    write_histogram(res, vars(args), args.out)
    for f in res.families:
        counts, edges = np.histogram(res.boundaries[f], bins=20)
        print(f"{f}: mean {res.boundaries[f].mean():.4f}  sweep argmin {res.sweep_best_offset[f]:.3f}")
        for c, lo in zip(counts, edges):
            print(f"  {lo:7.4f} {'#' * int(c)}")


if __name__ == "__main__":
    main()
