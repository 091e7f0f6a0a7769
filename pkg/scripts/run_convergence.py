"""Scaled empirical Ncut of the plane x = 0.5 on the uniform density, against its limit.

    python scripts/run_convergence.py --family r --grid 500 2000 8000
"""
import argparse
import os

from ncutlab.experiments import run_convergence, write_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=("knn", "r"), default="r")
    ap.add_argument("--grid", type=int, nargs="+", default=[500, 2000, 8000])
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    rows = run_convergence("uniform1d", args.family, args.grid, reps=args.reps, base_seed=args.seed,
                           threads=args.threads)
    write_convergence(rows, vars(args), args.out or f"results/convergence_{args.family}")
    print(f"{'n':>6} {'param':>10} {'scaled':>10} {'limit':>6} {'|err|':>8} {'std':>8}")
    for r in rows:
        print(f"{r.n:6d} {r.param:10.4f} {r.mean_scaled_ncut:10.4f} {r.limit:6.2f} "
              f"{r.mean_abs_error:8.4f} {r.std_abs_error:8.4f}")


if __name__ == "__main__":
    main()
