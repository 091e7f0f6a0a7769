"""Repeated-sample studies: kNN vs r-graph clusterings, boundary histograms, convergence curves.

Every rep draws its own sample with seed ``base_seed + rep`` and is processed
independently, so reps can run on a thread pool; results are always merged in
rep order.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from . import limits, quality
from .density import density_from_dict, sample
from .graph import GraphSpec, WeightFunction, build_graph, build_knn, build_r_graph, mean_knn_radius
from .quality import Hyperplane
from .spectral import SpectralConfig, spectral_bipartition


class LengthMismatch(ValueError):
    pass


class SingleCluster(ValueError):
    pass


COMPARISON_FAMILIES = ("knn", "r")


# ---------------------------------------------------------------------------
# label utilities


def minimal_matching_distance(labels1, labels2) -> float:
    """Fraction of points on which two 2-clusterings disagree, minimized over the label swap."""
    a = np.asarray(labels1)
    b = np.asarray(labels2)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"label arrays have shapes {a.shape} and {b.shape}")
    if a.size == 0:
        raise LengthMismatch("labelings are empty")
    values = np.union1d(np.unique(a), np.unique(b))
    if values.size > 2:
        raise ValueError("labelings must use at most two labels")
    # encode each labeling against a shared alphabet so that the swap is well defined
    a01 = a == values[0]
    b01 = b == values[0]
    mismatch = float(np.count_nonzero(a01 != b01)) / a.size
    return min(mismatch, 1.0 - mismatch)


@dataclass(frozen=True)
class Boundary:
    location: float
    interleaved: bool
    disagreements: int


def cluster_boundary_1d(points, labels) -> Boundary:
    """Cut point between the two clusters of a 1-D sample.

    For a clean interval split this is the midpoint between the last point of the
    left cluster and the first point of the right one.  Otherwise the split
    position that agrees with the most labels is used and the result is flagged.
    """
    x = np.asarray(points, dtype=float).reshape(-1)
    lab = np.asarray(labels).reshape(-1)
    if x.size != lab.size:
        raise LengthMismatch(f"{x.size} points but {lab.size} labels")
    values = np.unique(lab)
    if values.size != 2:
        raise SingleCluster("both clusters must be present")
    order = np.lexsort((lab, x))
    xs = x[order]
    right = lab[order] == values[1]
    n = xs.size
    # errors of split m (first m left) for both orientations
    right_before = np.concatenate([[0], np.cumsum(right)])
    left_after = np.concatenate([np.cumsum((~right)[::-1])[::-1], [0]])
    err_a = right_before + left_after                       # values[0] on the left
    err_b = (np.arange(n + 1) - right_before) + (n - np.arange(n + 1) - left_after)
    err = np.minimum(err_a, err_b)[1:n]
    m = int(np.argmin(err)) + 1
    best = int(err[m - 1])
    return Boundary(0.5 * (xs[m - 1] + xs[m]), best > 0, best)


# ---------------------------------------------------------------------------
# comparison of kNN and r-graph clusterings


@dataclass
class ExperimentConfig:
    density: str | dict = "example1"
    families: tuple[str, ...] = COMPARISON_FAMILIES
    n: int = 2000
    reps: int = 20
    k: int = 30
    # "mean_knn_radius" (mean distance to the k-th neighbor of the rep's sample) or a fixed r
    r_rule: str | float = "mean_knn_radius"
    knn_variant: str = "symmetric"
    base_seed: int = 0
    axis: int = 0
    sweep_step: float = 1e-3
    discretization: str = "kmeans"
    # size of the common sample used to compare clusterings of different reps
    eval_n: int = 2000
    threads: int = 1

    def __post_init__(self):
        self.families = tuple(self.families)
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.n < 10:
            raise ValueError("n must be >= 10")
        if not 1 <= self.k < self.n:
            raise ValueError("need 1 <= k < n")
        for f in self.families:
            if f not in COMPARISON_FAMILIES:
                raise ValueError(f"unknown family {f!r}; expected one of {COMPARISON_FAMILIES}")
        if not self.families:
            raise ValueError("need at least one family")
        if isinstance(self.r_rule, str):
            if self.r_rule != "mean_knn_radius":
                raise ValueError(f"unknown r_rule {self.r_rule!r}")
        elif not self.r_rule > 0:
            raise ValueError("a fixed r must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not self.sweep_step > 0:
            raise ValueError("sweep_step must be positive")

    def resolved_density(self):
        return density_from_dict(self.density)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RepOutcome:
    rep: int
    seed: int
    family: str
    labels: np.ndarray
    eval_labels: np.ndarray
    connected: bool
    n_components: int
    lambda2: float
    ncut: float
    param: float
    boundary: Boundary | None
    meta: dict = field(default_factory=dict)


@dataclass
class Stat:
    mean: float
    std: float
    count: int

    @classmethod
    def of(cls, values) -> "Stat":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls(math.nan, math.nan, 0)
        return cls(float(np.mean(v)), float(np.std(v)), int(v.size))


@dataclass
class RunResult:
    config: ExperimentConfig
    outcomes: list[RepOutcome]
    distances: dict[str, np.ndarray]
    stats: dict[str, Stat]
    connected_stats: dict[str, Stat]
    sweep_offsets: dict[str, float] = field(default_factory=dict)

    def outcome(self, rep: int, slot: int) -> RepOutcome:
        return self.outcomes[rep * len(self.config.families) + slot]

    def boundaries(self, slot: int) -> np.ndarray:
        return np.array([o.boundary.location for o in self.outcomes[slot::len(self.config.families)]])

    def summary(self) -> dict:
        return {
            "stats": {k: asdict(v) for k, v in self.stats.items()},
            "connected_only": {k: asdict(v) for k, v in self.connected_stats.items()},
            "n_disconnected": {f"{s}:{f}": int(sum(not o.connected for o in self.outcomes[s::len(self.config.families)]))
                               for s, f in enumerate(self.config.families)},
            "sweep_best_offset": self.sweep_offsets,
        }


def _family_graph(points, family: str, config: ExperimentConfig):
    d = points.shape[1]
    if family == "knn":
        return build_knn(points, config.k, config.knn_variant, WeightFunction("unit", dim=d)), float(config.k)
    r = mean_knn_radius(points, config.k) if isinstance(config.r_rule, str) else float(config.r_rule)
    return build_r_graph(points, r, WeightFunction("unit", dim=d)), r


def _run_rep(rep: int, density, eval_points: np.ndarray, config: ExperimentConfig) -> list[RepOutcome]:
    seed = config.base_seed + rep
    pts = sample(density, config.n, seed).points
    tree = cKDTree(pts)
    _, nearest = tree.query(eval_points)
    spec_cfg = SpectralConfig(discretization=config.discretization)
    out = []
    for family in config.families:
        g, param = _family_graph(pts, family, config)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = spectral_bipartition(g, spec_cfg, seed=seed, points=pts)
        labels = res.labels
        bnd = cluster_boundary_1d(pts[:, 0], labels) if pts.shape[1] == 1 else None
        out.append(RepOutcome(rep, seed, family, labels, labels[nearest], res.connected, res.n_components,
                              res.lambda2, res.ncut, param, bnd, dict(res.meta)))
    return out


def _map_reps(fn: Callable[[int], list], reps: int, threads: int) -> list:
    if threads == 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves input order, so the merge does not depend on completion order
        return list(pool.map(fn, range(reps)))


def _slot_name(config: ExperimentConfig, slot: int) -> str:
    fam = config.families[slot]
    if config.families.count(fam) > 1:
        return f"{fam}{slot}"
    return fam


def run_comparison(config: ExperimentConfig) -> RunResult:
    """Cluster ``reps`` samples with each family and compare the clusterings.

    Within a family the distance between reps a and b is measured on a common
    evaluation sample (seed ``base_seed + reps``), each rep's labels being carried
    over by nearest sample point.  Between families two pairings are reported:
    same-rep pairs on the rep's own sample ("matched") and all rep pairs on the
    evaluation sample ("all_pairs").
    """
    density = config.resolved_density()
    eval_points = sample(density, config.eval_n, config.base_seed + config.reps).points
    per_rep = _map_reps(lambda r: _run_rep(r, density, eval_points, config), config.reps, config.threads)
    outcomes = [o for rep in per_rep for o in rep]
    nf = len(config.families)
    reps = config.reps

    distances: dict[str, np.ndarray] = {}
    connected: dict[str, np.ndarray] = {}
    for s in range(nf):
        name = _slot_name(config, s)
        runs = outcomes[s::nf]
        pairs = [(a, b) for a in range(reps) for b in range(a + 1, reps)]
        distances[f"d_{name}"] = np.array([minimal_matching_distance(runs[a].eval_labels, runs[b].eval_labels)
                                           for a, b in pairs])
        connected[f"d_{name}"] = np.array([runs[a].connected and runs[b].connected for a, b in pairs], dtype=bool)
    for s in range(nf):
        for t in range(s + 1, nf):
            key = f"d_{_slot_name(config, s)}-{_slot_name(config, t)}"
            rs, rt = outcomes[s::nf], outcomes[t::nf]
            distances[key] = np.array([minimal_matching_distance(rs[a].labels, rt[a].labels) for a in range(reps)])
            connected[key] = np.array([rs[a].connected and rt[a].connected for a in range(reps)], dtype=bool)
            distances[key + ":all_pairs"] = np.array([
                minimal_matching_distance(rs[a].eval_labels, rt[b].eval_labels)
                for a in range(reps) for b in range(reps)])
            connected[key + ":all_pairs"] = np.array([rs[a].connected and rt[b].connected
                                                      for a in range(reps) for b in range(reps)], dtype=bool)
    stats = {k: Stat.of(v) for k, v in distances.items()}
    connected_stats = {k: Stat.of(v[connected[k]]) for k, v in distances.items()}

    sweep = {}
    if density.dim <= 3:
        lo, hi = density.bounding_box[config.axis]
        offsets = _sweep_grid(lo, hi, config.sweep_step)
        fams = [f for f in dict.fromkeys(config.families)]
        for f, res in limits.sweep_families(density, fams, config.axis, offsets).items():
            sweep[f] = res.best_offset
    return RunResult(config, outcomes, distances, stats, connected_stats, sweep)


def _sweep_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Multiples of ``step`` strictly inside (lo, hi)."""
    start = math.floor(lo / step) + 1
    stop = math.ceil(hi / step) - 1
    return np.arange(start, stop + 1) * step


# ---------------------------------------------------------------------------
# boundary histograms (1-D)


@dataclass
class HistogramResult:
    families: tuple[str, ...]
    boundaries: dict[str, np.ndarray]
    interleaved: dict[str, np.ndarray]
    connected: dict[str, np.ndarray]
    sweep_best_offset: dict[str, float]

    def summary(self) -> dict:
        return {f: {"mean_boundary": float(np.mean(self.boundaries[f])),
                    "std_boundary": float(np.std(self.boundaries[f])),
                    "sweep_best_offset": self.sweep_best_offset[f],
                    "n_interleaved": int(np.sum(self.interleaved[f])),
                    "n_disconnected": int(np.sum(~self.connected[f]))}
                for f in self.families}


def run_boundary_histogram(density, families=COMPARISON_FAMILIES, n: int = 2000, reps: int = 100,
                           k: int = 30, base_seed: int = 0, threads: int = 1,
                           sweep_step: float = 1e-3, discretization: str = "kmeans") -> HistogramResult:
    """Cluster boundaries of ``reps`` samples per family, next to the sweep-predicted optimal cut."""
    if isinstance(density, (str, dict)):
        density = density_from_dict(density)
    if density.dim != 1:
        raise ValueError("boundary histograms need a 1-D density")
    families = tuple(dict.fromkeys(families))
    config = ExperimentConfig(density=density.to_dict(), families=families, n=n, reps=reps, k=k,
                              base_seed=base_seed, threads=threads, sweep_step=sweep_step,
                              discretization=discretization, eval_n=10)
    dummy_eval = np.zeros((1, 1))
    per_rep = _map_reps(lambda r: _run_rep(r, density, dummy_eval, config), reps, threads)
    bounds, inter, conn = {}, {}, {}
    for s, f in enumerate(families):
        runs = [rep[s] for rep in per_rep]
        bounds[f] = np.array([o.boundary.location for o in runs])
        inter[f] = np.array([o.boundary.interleaved for o in runs], dtype=bool)
        conn[f] = np.array([o.connected for o in runs], dtype=bool)
    lo, hi = density.bounding_box[0]
    sweep = limits.sweep_families(density, list(families), 0, _sweep_grid(lo, hi, sweep_step))
    return HistogramResult(families, bounds, inter, conn, {f: sweep[f].best_offset for f in families})


# ---------------------------------------------------------------------------
# convergence of the scaled Ncut to its limit


@dataclass(frozen=True)
class Schedule:
    """Parameter as a function of n for the rate-optimal choices.

    kind "r" and "sigma": c0 (log n / n)^(1/(d+3)); kind "k": c0 (n^3 log n)^(1/4)
    for d = 1 and c0 n^(2/(d+2)) (log n)^(d/(d+2)) for d >= 2, rounded.
    """

    kind: str
    c0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("r", "k", "sigma"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")

    def __call__(self, n: int, d: int) -> float:
        ln = math.log(n)
        if self.kind in ("r", "sigma"):
            return self.c0 * (ln / n) ** (1.0 / (d + 3))
        if d == 1:
            k = self.c0 * (n**3 * ln) ** 0.25
        else:
            k = self.c0 * n ** (2.0 / (d + 2)) * ln ** (d / (d + 2.0))
        return float(min(n - 1, max(1, round(k))))


CONVERGENCE_FAMILIES = {"knn_unweighted": "k", "r_unweighted": "r", "complete_gauss": "sigma"}


@dataclass
class ConvergenceRow:
    n: int
    param: float
    mean_scaled_ncut: float
    limit: float
    mean_abs_error: float
    std_abs_error: float
    reps: int


def _convergence_spec(family: str, param: float, d: int, knn_variant: str) -> GraphSpec:
    if family == "knn_unweighted":
        return GraphSpec(f"knn_{knn_variant}", k=int(param), weight=WeightFunction("unit", dim=d))
    if family == "r_unweighted":
        return GraphSpec("r_neighborhood", r=param, weight=WeightFunction("unit", dim=d))
    return GraphSpec("complete", weight=WeightFunction("gaussian", sigma=param, dim=d))


def run_convergence(density, family: str, n_grid, schedule: Schedule | None = None, reps: int = 10,
                    hyperplane: Hyperplane | None = None, base_seed: int = 0, threads: int = 1,
                    knn_variant: str = "directed") -> list[ConvergenceRow]:
    """Scaled empirical Ncut of a fixed hyperplane partition against its limit, for growing n.

    kNN graphs default to the directed variant, whose volumes (k per node) carry no
    boundary bias.
    """
    if isinstance(density, (str, dict)):
        density = density_from_dict(density)
    family = limits.resolve_family(family)
    if family not in CONVERGENCE_FAMILIES:
        raise ValueError(f"convergence runs support {sorted(CONVERGENCE_FAMILIES)}, got {family!r}")
    schedule = schedule or Schedule(CONVERGENCE_FAMILIES[family])
    if schedule.kind != CONVERGENCE_FAMILIES[family]:
        raise ValueError(f"family {family} needs a {CONVERGENCE_FAMILIES[family]!r} schedule")
    d = density.dim
    if hyperplane is None:
        lo, hi = density.bounding_box[0]
        hyperplane = Hyperplane.axis_aligned(d, 0, 0.5 * (lo + hi))
    limit = limits.ncut_limit(density, hyperplane, family).ncut_lim

    rows = []
    for n in n_grid:
        n = int(n)
        param = schedule(n, d)
        spec = _convergence_spec(family, param, d, knn_variant)

        def one(rep, n=n, spec=spec):
            pts = sample(density, n, base_seed + rep).points
            g = build_graph(pts, spec)
            labels = quality.induce_partition(pts, hyperplane)
            return quality.ncut(g, labels, d=d).scaled_ncut

        values = np.array(_map_reps(one, reps, threads))
        errors = np.abs(values - limit)
        rows.append(ConvergenceRow(n, param, float(values.mean()), float(limit), float(errors.mean()),
                                   float(errors.std()), reps))
    return rows


# ---------------------------------------------------------------------------
# output files


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _to_json(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_to_json(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return _fmt(v)
    return json.dumps(obj)


def write_json(obj, path) -> None:
    Path(path).write_text(_to_json(obj) + "\n")


def write_comparison(result: RunResult, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(result.config.to_dict(), out / "config.json")
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "seed", "family", "param", "connected", "n_components", "lambda2", "ncut", "boundary"])
        for o in result.outcomes:
            w.writerow([o.rep, o.seed, o.family, _fmt(o.param), int(o.connected), o.n_components,
                        _fmt(o.lambda2), _fmt(o.ncut), _fmt(o.boundary.location) if o.boundary else ""])
    write_boundaries(result.outcomes, out / "boundaries.csv")
    write_json(result.summary(), out / "summary.json")


def write_boundaries(outcomes, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "family", "boundary", "interleaved", "disagreements"])
        for o in outcomes:
            if o.boundary is not None:
                w.writerow([o.rep, o.family, _fmt(o.boundary.location), int(o.boundary.interleaved),
                            o.boundary.disagreements])


def write_histogram(result: HistogramResult, config: dict, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(config, out / "config.json")
    with open(out / "boundaries.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "family", "boundary", "interleaved", "connected"])
        for f in result.families:
            for rep, (b, i, c) in enumerate(zip(result.boundaries[f], result.interleaved[f], result.connected[f])):
                w.writerow([rep, f, _fmt(b), int(i), int(c)])
    write_json(result.summary(), out / "summary.json")


def write_convergence(rows: list[ConvergenceRow], config: dict, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(config, out / "config.json")
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "param", "mean_scaled_ncut", "limit", "mean_abs_error", "std_abs_error", "reps"])
        for r in rows:
            w.writerow([r.n, _fmt(r.param), _fmt(r.mean_scaled_ncut), _fmt(r.limit), _fmt(r.mean_abs_error),
                        _fmt(r.std_abs_error), r.reps])
    write_json({"rows": [asdict(r) for r in rows]}, out / "summary.json")
