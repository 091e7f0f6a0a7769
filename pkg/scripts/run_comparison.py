"""kNN vs r-graph clusterings on Example 1 (d = 1, k = 30) or Example 2 (d = 2, k = 150).

    python scripts/run_comparison.py --example 1 --out results/example1
"""
import argparse
import os

from ncutlab.experiments import ExperimentConfig, run_comparison, write_comparison

SETTINGS = {
    1: dict(density="example1", n=2000, k=30, reps=20),
    2: dict(density="example2", n=2000, k=150, reps=10, sweep_step=1e-2),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--example", type=int, choices=(1, 2), default=1)
    ap.add_argument("--reps", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    kw = dict(SETTINGS[args.example], base_seed=args.seed, threads=args.threads)
    if args.reps:
        kw["reps"] = args.reps
    res = run_comparison(ExperimentConfig(**kw))
    write_comparison(res, args.out or f"results/example{args.example}")
    for key, s in res.stats.items():
        print(f"{key:>20s}  {s.mean:.4f} +- {s.std:.4f}  (n={s.count})")
    print("disconnected:", res.summary()["n_disconnected"])
    print("sweep argmins:", res.sweep_offsets)


if __name__ == "__main__":
    main()
