"""Command-line entry point: ``ncutlab <subcommand> --config cfg.json --output-dir out``.

Each subcommand reads a JSON config, writes its files into the output directory
and prints a one-line summary.  Exit status 2 means the config was rejected,
1 means the computation failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, limits, quality
from .density import density_from_dict, sample
from .experiments import ExperimentConfig, Schedule, _fmt, write_json
from .graph import GraphSpec, WeightFunction, build_graph, mean_knn_radius
from .quality import Hyperplane
from .spectral import SpectralConfig, spectral_bipartition

SUBCOMMANDS = ("sample", "graph", "quality", "limits", "sweep", "spectral", "compare", "converge", "histogram")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing


def _load_config(path) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def _field(cfg: dict, name: str, default=None, required: bool = False):
    if name not in cfg:
        if required:
            raise ConfigError(f"field '{name}': missing")
        return default
    return cfg[name]


def _check_keys(cfg: dict, allowed, where: str = "config") -> None:
    extra = sorted(set(cfg) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(extra)}")


def _wrap(name: str, fn, *args, **kwargs):
    """Run a constructor, turning its validation errors into ConfigError naming the field."""
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"field '{name}': {exc}") from None


def _weight(cfg, d: int) -> WeightFunction:
    if cfg is None:
        return WeightFunction("unit", dim=d)
    if not isinstance(cfg, dict):
        raise ConfigError("field 'graph.weight': expected an object")
    _check_keys(cfg, ("kind", "sigma"), "graph.weight")
    return _wrap("graph.weight", WeightFunction, cfg.get("kind", "unit"), cfg.get("sigma"), d)


def _graph_spec(cfg, points: np.ndarray) -> GraphSpec:
    if not isinstance(cfg, dict):
        raise ConfigError("field 'graph': expected an object")
    _check_keys(cfg, ("kind", "k", "r", "weight", "regime"), "graph")
    d = points.shape[1]
    r = cfg.get("r")
    if r == "mean_knn_radius":
        if cfg.get("k") is None:
            raise ConfigError("field 'graph.r': mean_knn_radius needs graph.k")
        r = mean_knn_radius(points, int(cfg["k"]))
    return _wrap("graph", GraphSpec, _field(cfg, "kind", required=True), cfg.get("k"), r,
                 _weight(cfg.get("weight"), d), cfg.get("regime"))


def _hyperplane(cfg, d: int) -> Hyperplane:
    if not isinstance(cfg, dict):
        raise ConfigError("field 'hyperplane': expected an object")
    _check_keys(cfg, ("normal", "offset", "axis"), "hyperplane")
    offset = float(_field(cfg, "offset", required=True))
    if "normal" in cfg:
        normal = np.asarray(cfg["normal"], dtype=float)
        if normal.shape != (d,):
            raise ConfigError(f"field 'hyperplane.normal': expected {d} entries")
        return _wrap("hyperplane.normal", Hyperplane.from_normal, normal, offset)
    return _wrap("hyperplane.axis", Hyperplane.axis_aligned, d, int(cfg.get("axis", 0)), offset)


def _density(cfg):
    return _wrap("density", density_from_dict, _field(cfg, "density", required=True))


def _points(cfg, seed: int) -> np.ndarray:
    """Explicit ``points`` or a fresh sample of ``n`` points from ``density``."""
    if "points" in cfg:
        pts = np.asarray(cfg["points"], dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ConfigError("field 'points': expected a list of points")
        return pts
    density = _density(cfg)
    n = int(_field(cfg, "n", required=True))
    if n < 1:
        raise ConfigError("field 'n': must be positive")
    return sample(density, n, seed).points


def _seed(cfg, args, key: str = "seed") -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(cfg.get(key, 0))


# ---------------------------------------------------------------------------
# output helpers


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# subcommands: each returns a zero-argument runner producing the summary line


def _cmd_sample(cfg, args, out: Path):
    _check_keys(cfg, ("density", "n", "seed"))
    seed = _seed(cfg, args)
    density = _density(cfg)
    n = int(_field(cfg, "n", required=True))

    def run():
        pts = sample(density, n, seed).points
        if args.format == "json":
            write_json({"seed": seed, "points": pts.tolist()}, out / "samples.json")
        else:
            _write_rows(out / "samples.csv", [f"x{a}" for a in range(pts.shape[1])], pts.tolist())
        return f"sampled n={n} d={pts.shape[1]} seed={seed}"
    return run


def _cmd_graph(cfg, args, out: Path):
    _check_keys(cfg, ("density", "n", "points", "seed", "graph"))
    pts = _points(cfg, _seed(cfg, args))
    spec = _graph_spec(_field(cfg, "graph", required=True), pts)

    def run():
        g = build_graph(pts, spec)
        if args.format == "json":
            write_json({"n": g.n, "directed": g.directed, "kind": spec.kind,
                        "edges": [[a, b, c] for a, b, c in g.edges]}, out / "graph.json")
        else:
            g.dump_csv(out / "graph.csv")
        return f"graph kind={spec.kind} n={g.n} edges={g.n_edges}"
    return run


def _cmd_quality(cfg, args, out: Path):
    _check_keys(cfg, ("density", "n", "points", "seed", "graph", "hyperplane"))
    pts = _points(cfg, _seed(cfg, args))
    spec = _graph_spec(_field(cfg, "graph", required=True), pts)
    hp = _hyperplane(_field(cfg, "hyperplane", required=True), pts.shape[1])

    def run():
        g = build_graph(pts, spec)
        rep = quality.ncut(g, quality.induce_partition(pts, hp), d=pts.shape[1])
        if args.format == "json":
            (out / "quality.json").write_text(rep.to_json() + "\n")
        else:
            (out / "quality.csv").write_text(rep.csv_header() + "\n" + rep.csv_line() + "\n")
        return rep.csv_line()
    return run


def _cmd_limits(cfg, args, out: Path):
    _check_keys(cfg, ("density", "hyperplane", "families"))
    density = _density(cfg)
    hp = _hyperplane(_field(cfg, "hyperplane", required=True), density.dim)
    families = [_wrap("families", limits.resolve_family, f) for f in cfg.get("families", ["knn", "r"])]

    def run():
        reports = [limits.ncut_limit(density, hp, f) for f in families]
        if args.format == "json":
            write_json({"limits": [r.to_dict() for r in reports]}, out / "limits.json")
        else:
            _write_rows(out / "limits.csv",
                        ["family", "cut_lim", "vol_lim_plus", "vol_lim_minus", "ncut_lim", "cheeger_lim",
                         "quadrature_error"],
                        [[r.family, r.cut_lim, r.vol_lim_plus, r.vol_lim_minus, r.ncut_lim, r.cheeger_lim,
                          r.quadrature_error] for r in reports])
        return " ".join(f"{r.family}:ncut_lim={_fmt(r.ncut_lim)}" for r in reports)
    return run


def _cmd_sweep(cfg, args, out: Path):
    _check_keys(cfg, ("density", "families", "axis", "offsets", "step", "lower", "upper"))
    density = _density(cfg)
    axis = int(cfg.get("axis", 0))
    if not 0 <= axis < density.dim:
        raise ConfigError(f"field 'axis': must be in [0, {density.dim})")
    families = list(cfg.get("families", ["knn", "r"]))
    for f in families:
        _wrap("families", limits.resolve_family, f)
    if "offsets" in cfg:
        offsets = np.asarray(cfg["offsets"], dtype=float)
    else:
        lo, hi = density.bounding_box[axis]
        lo = float(cfg.get("lower", lo))
        hi = float(cfg.get("upper", hi))
        step = float(cfg.get("step", 1e-3))
        if not step > 0:
            raise ConfigError("field 'step': must be positive")
        offsets = experiments._sweep_grid(lo, hi, step)
    if offsets.size == 0 or np.any(np.diff(offsets) <= 0):
        raise ConfigError("field 'offsets': must be nonempty and strictly increasing")

    def run():
        curves = limits.sweep_families(density, families, axis, offsets)
        summary = []
        for name, res in curves.items():
            _write_rows(out / f"curve_{name}.csv", ["offset", "ncut_lim", "cheeger_lim"],
                        zip(res.offsets.tolist(), res.ncut_lim.tolist(), res.cheeger_lim.tolist()))
            summary.append({"family": res.family, "name": name, "best_offset": res.best_offset})
        write_json({"curves": summary}, out / "summary.json")
        return " ".join(f"{s['name']}:best_offset={_fmt(s['best_offset'])}" for s in summary)
    return run


def _cmd_spectral(cfg, args, out: Path):
    _check_keys(cfg, ("density", "n", "points", "seed", "graph", "spectral"))
    seed = _seed(cfg, args)
    pts = _points(cfg, seed)
    spec = _graph_spec(_field(cfg, "graph", required=True), pts)
    scfg = cfg.get("spectral", {})
    if not isinstance(scfg, dict):
        raise ConfigError("field 'spectral': expected an object")
    sconf = _wrap("spectral", SpectralConfig, **scfg)

    def run():
        g = build_graph(pts, spec)
        res = spectral_bipartition(g, sconf, seed=seed, points=pts)
        _write_rows(out / "labels.csv", ["node", "label"], ((i, int(v)) for i, v in enumerate(res.labels)))
        write_json(res.record(), out / "spectral.json")
        return f"lambda2={_fmt(res.lambda2)} ncut={_fmt(res.ncut)} threshold_index={res.threshold_index}"
    return run


_EXPERIMENT_FIELDS = tuple(ExperimentConfig.__dataclass_fields__)


def _cmd_compare(cfg, args, out: Path):
    _check_keys(cfg, _EXPERIMENT_FIELDS)
    cfg = dict(cfg)
    if args.seed is not None:
        cfg["base_seed"] = args.seed
    cfg["threads"] = args.threads
    conf = _wrap("config", ExperimentConfig, **cfg)
    _wrap("density", conf.resolved_density)

    def run():
        res = experiments.run_comparison(conf)
        experiments.write_comparison(res, out)
        return " ".join(f"{k}={_fmt(v.mean)}+-{_fmt(v.std)}" for k, v in res.stats.items()
                        if not k.endswith("all_pairs"))
    return run


def _cmd_converge(cfg, args, out: Path):
    _check_keys(cfg, ("density", "family", "n_grid", "schedule", "reps", "hyperplane", "base_seed", "knn_variant"))
    density = _density(cfg)
    family = _wrap("family", limits.resolve_family, _field(cfg, "family", required=True))
    n_grid = [int(n) for n in _field(cfg, "n_grid", required=True)]
    if not n_grid or min(n_grid) < 10:
        raise ConfigError("field 'n_grid': needs values >= 10")
    sched = cfg.get("schedule")
    schedule = None if sched is None else _wrap("schedule", Schedule, **sched)
    hp = _hyperplane(cfg["hyperplane"], density.dim) if "hyperplane" in cfg else None
    reps = int(cfg.get("reps", 10))
    base_seed = args.seed if args.seed is not None else int(cfg.get("base_seed", 0))
    variant = cfg.get("knn_variant", "directed")

    def run():
        rows = experiments.run_convergence(density, family, n_grid, schedule, reps, hp, base_seed,
                                           args.threads, variant)
        echo = dict(cfg, base_seed=base_seed)
        experiments.write_convergence(rows, echo, out)
        last = rows[-1]
        return f"{family}: n={last.n} mean_scaled_ncut={_fmt(last.mean_scaled_ncut)} limit={_fmt(last.limit)}"
    return run


def _cmd_histogram(cfg, args, out: Path):
    _check_keys(cfg, ("density", "families", "n", "reps", "k", "base_seed", "sweep_step", "discretization"))
    density = _density(cfg)
    if density.dim != 1:
        raise ConfigError("field 'density': boundary histograms need a 1-D density")
    kwargs = {k: cfg[k] for k in ("n", "reps", "k", "sweep_step", "discretization") if k in cfg}
    families = tuple(cfg.get("families", experiments.COMPARISON_FAMILIES))
    base_seed = args.seed if args.seed is not None else int(cfg.get("base_seed", 0))
    _wrap("config", ExperimentConfig, density=cfg["density"], families=families, eval_n=10,
          **{k: v for k, v in kwargs.items()})

    def run():
        res = experiments.run_boundary_histogram(density, families, base_seed=base_seed,
                                                 threads=args.threads, **kwargs)
        experiments.write_histogram(res, dict(cfg, base_seed=base_seed), out)
        s = res.summary()
        return " ".join(f"{f}:mean={_fmt(s[f]['mean_boundary'])} sweep={_fmt(s[f]['sweep_best_offset'])}"
                        for f in families)
    return run


_COMMANDS = {
    "sample": _cmd_sample, "graph": _cmd_graph, "quality": _cmd_quality, "limits": _cmd_limits,
    "sweep": _cmd_sweep, "spectral": _cmd_spectral, "compare": _cmd_compare, "converge": _cmd_converge,
    "histogram": _cmd_histogram,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncutlab", description="Normalized-cut limits of neighborhood graphs.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--output-dir", default=".", help="directory for output files (created if absent)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return 2
    out = Path(args.output_dir)
    try:
        cfg = _load_config(args.config)
        runner = _COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # sampling inside config preparation can fail at runtime
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    try:
        out.mkdir(parents=True, exist_ok=True)
        line = runner()
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
