"""Ncut limit curves for kNN and r-graphs along the first axis of each example density.

    python scripts/run_sweeps.py --out results/sweeps
"""
import argparse
from pathlib import Path

import numpy as np

from ncutlab.density import get_density
from ncutlab.experiments import write_json
from ncutlab.limits import sweep_families


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--step-2d", type=float, default=1e-2, help="step for the 2-D example (slow at 1e-3)")
    ap.add_argument("--out", default="results/sweeps")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name in ("example1", "example2", "example3"):
        dens = get_density(name)
        step = args.step if dens.dim == 1 else args.step_2d
        lo, hi = dens.bounding_box[0]
        offsets = np.arange(np.floor(lo / step) + 1, np.ceil(hi / step)) * step
        for fam, res in sweep_families(dens, ["knn", "r"], 0, offsets).items():
            with open(out / f"{name}_curve_{fam}.csv", "w") as fh:
                fh.write("offset,ncut_lim,cheeger_lim\n")
                fh.writelines(row + "\n" for row in res.csv_rows())
            summary[f"{name}:{fam}"] = res.best_offset
            print(f"{name:9s} {fam:4s} best offset {res.best_offset:.4f}")
    write_json(summary, out / "summary.json")


if __name__ == "__main__":
    main()
