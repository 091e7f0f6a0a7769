"""Truncated, rescaled isotropic Gaussian mixtures and a uniform reference density.

A mixture is set to zero wherever its raw value drops below a threshold and is then
renormalized, which gives a density that is bounded away from zero on a compact
support.  Both density classes expose the same duck-typed surface used by the
quadrature and graph code: ``dim``, ``bounding_box``, ``pdf``, ``in_support``,
``support_on_line``, ``axis_breakpoints`` and ``sample``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize

from . import quadrature

__all__ = [
    "EmptySupport",
    "RejectionStall",
    "GaussianComponent",
    "TruncatedMixture",
    "UniformBox",
    "SampleSet",
    "normalize",
    "evaluate",
    "sample",
    "PRESETS",
    "get_density",
    "density_from_dict",
    "load_density",
]

BOX_HALF_WIDTH_STDS = 8.0
_LINE_GRID = 1025
_BOX_GRID = {1: 200001, 2: 801, 3: 81}
_MAX_PROPOSALS_CHECK = 1_000_000
_MIN_ACCEPTANCE = 1e-4


class EmptySupport(ValueError):
    pass


class RejectionStall(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: tuple[float, ...]
    std: float

    def __post_init__(self):
        if not self.weight > 0 or not self.std > 0:
            raise ValueError("component weight and std must be positive")
        object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))


def _raw_mixture(components: Sequence[GaussianComponent], x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    out = np.zeros(x.shape[:-1])
    for c in components:
        sq = np.sum((x - np.asarray(c.mean)) ** 2, axis=-1)
        norm = (2.0 * math.pi * c.std**2) ** (-d / 2.0)
        out = out + c.weight * norm * np.exp(-0.5 * sq / c.std**2)
    return out


def _intervals_from_mask(grid: np.ndarray, mask: np.ndarray, refine) -> list[tuple[float, float]]:
    """Turn a boolean mask over a 1-D grid into support intervals, refining the edges."""
    if not mask.any():
        return []
    m = mask.astype(np.int8)
    change = np.flatnonzero(np.diff(m))
    starts = [0] if mask[0] else []
    ends = []
    for c in change:
        if mask[c + 1]:
            starts.append(c + 1)
        else:
            ends.append(c)
    if mask[-1]:
        ends.append(len(grid) - 1)
    intervals = []
    for s, e in zip(starts, ends):
        a = grid[s] if s == 0 else refine(grid[s - 1], grid[s])
        b = grid[e] if e == len(grid) - 1 else refine(grid[e], grid[e + 1])
        intervals.append((float(a), float(b)))
    return intervals


@dataclass(frozen=True, eq=False)
class TruncatedMixture:
    """Mixture density with ``p(x) = raw(x)/Z`` on ``{raw >= theta}`` and zero elsewhere."""

    dim: int
    components: tuple[GaussianComponent, ...]
    theta: float
    normalizer: float
    bounding_box: tuple[tuple[float, float], ...]
    name: str = "custom"
    normalizer_stderr: float = 0.0
    # advisory only: the smallest positive density value seen on the support grid
    p_min: float = field(default=float("nan"))

    def raw(self, x) -> np.ndarray:
        return _raw_mixture(self.components, x)

    def in_support(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = np.ones(x.shape[:-1], dtype=bool)
        for axis, (lo, hi) in enumerate(self.bounding_box):
            inside &= (x[..., axis] >= lo) & (x[..., axis] <= hi)
        return inside & (self.raw(x) >= self.theta)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        raw = self.raw(x)
        inside = np.ones(x.shape[:-1], dtype=bool)
        for axis, (lo, hi) in enumerate(self.bounding_box):
            inside &= (x[..., axis] >= lo) & (x[..., axis] <= hi)
        return np.where(inside & (raw >= self.theta), raw / self.normalizer, 0.0)

    def support_on_line(self, point, axis: int) -> list[tuple[float, float]]:
        """Intervals of ``t`` where ``point`` with coordinate ``axis`` set to ``t`` is in the support."""
        lo, hi = self.bounding_box[axis]
        return _line_support(self.components, self.theta, np.asarray(point, float), axis, lo, hi)

    def axis_breakpoints(self, axis: int) -> list[float]:
        if self.dim == 1:
            pts = self.support_on_line(np.zeros(1), 0)
            return sorted({v for iv in pts for v in iv})
        return list(self.bounding_box[axis])

    def sample(self, n: int, seed: int) -> "SampleSet":
        return sample(self, n, seed)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "theta": self.theta,
            "components": [
                {"weight": c.weight, "mean": list(c.mean), "std": c.std} for c in self.components
            ],
        }


def _line_support(components, theta, point, axis, lo, hi):
    grid = np.linspace(lo, hi, _LINE_GRID)
    pts = np.repeat(point[None, :], grid.size, axis=0)
    pts[:, axis] = grid
    mask = _raw_mixture(components, pts) >= theta
    if theta <= 0.0:
        return [(float(lo), float(hi))]

    def excess(t):
        q = point.copy()
        q[axis] = t
        return float(_raw_mixture(components, q[None, :])[0]) - theta

    def refine(a, b):
        # root of raw - theta; nudge to the supported side so endpoints test as inside
        root = optimize.brentq(excess, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        if excess(root) < 0:
            root = np.nextafter(root, b if excess(b) >= 0 else a)
        return root

    return _intervals_from_mask(grid, mask, refine)


@dataclass(frozen=True, eq=False)
class UniformBox:
    """Uniform density on an axis-aligned box; used as an analytic reference."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    name: str = "uniform"

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def bounding_box(self):
        return tuple(zip(self.lower, self.upper))

    @property
    def value(self) -> float:
        return 1.0 / float(np.prod(np.subtract(self.upper, self.lower)))

    def in_support(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= np.asarray(self.lower)) & (x <= np.asarray(self.upper)), axis=-1)

    def pdf(self, x) -> np.ndarray:
        return np.where(self.in_support(x), self.value, 0.0)

    def support_on_line(self, point, axis: int):
        point = np.asarray(point, float)
        for a in range(self.dim):
            if a != axis and not (self.lower[a] <= point[a] <= self.upper[a]):
                return []
        return [(float(self.lower[axis]), float(self.upper[axis]))]

    def axis_breakpoints(self, axis: int) -> list[float]:
        return [float(self.lower[axis]), float(self.upper[axis])]

    def sample(self, n: int, seed: int) -> "SampleSet":
        return sample(self, n, seed)

    def to_dict(self) -> dict:
        return {"uniform": {"lower": list(self.lower), "upper": list(self.upper)}}


@dataclass(frozen=True, eq=False)
class SampleSet:
    points: np.ndarray
    seed: int
    density_id: str

    def __len__(self):
        return self.points.shape[0]


def _initial_box(components, d):
    box = []
    for axis in range(d):
        lo = min(c.mean[axis] - BOX_HALF_WIDTH_STDS * c.std for c in components)
        hi = max(c.mean[axis] + BOX_HALF_WIDTH_STDS * c.std for c in components)
        box.append((lo, hi))
    return box


def _tighten_box(components, theta, box):
    d = len(box)
    if d == 1:
        lo, hi = box[0]
        grid = np.linspace(lo, hi, _BOX_GRID[1])
        mask = _raw_mixture(components, grid[:, None]) >= theta
        if not mask.any():
            raise EmptySupport(f"no grid point satisfies raw >= theta={theta}")
        ivs = _line_support(components, theta, np.zeros(1), 0, lo, hi)
        vals = _raw_mixture(components, grid[mask][:, None])
        return [(ivs[0][0], ivs[-1][1])], float(vals.min())
    m = _BOX_GRID.get(d, 21)
    axes = [np.linspace(lo, hi, m) for lo, hi in box]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    raw = _raw_mixture(components, mesh)
    mask = raw >= theta
    if not mask.any():
        raise EmptySupport(f"no grid point satisfies raw >= theta={theta}")
    inside = mesh[mask]
    tight = []
    for axis, (lo, hi) in enumerate(box):
        step = (hi - lo) / (m - 1)
        tight.append((max(lo, inside[:, axis].min() - step), min(hi, inside[:, axis].max() + step)))
    return tight, float(raw[mask].min())


def _stratified_mc_mass(components, theta, box, seed=0, per_stratum=64, strata_per_axis=8):
    """Stratified Monte Carlo estimate of the supported raw mass, with standard error."""
    d = len(box)
    rng = np.random.default_rng(seed)
    lows = np.array([b[0] for b in box])
    widths = np.array([b[1] - b[0] for b in box]) / strata_per_axis
    cell_vol = float(np.prod(widths))
    idx = np.stack(np.meshgrid(*[np.arange(strata_per_axis)] * d, indexing="ij"), -1).reshape(-1, d)
    total, var = 0.0, 0.0
    for chunk in np.array_split(idx, max(1, len(idx) // 512)):
        u = rng.random((len(chunk), per_stratum, d))
        x = lows + (chunk[:, None, :] + u) * widths
        raw = _raw_mixture(components, x)
        vals = np.where(raw >= theta, raw, 0.0) * cell_vol
        total += vals.mean(axis=1).sum()
        var += (vals.var(axis=1, ddof=1) / per_stratum).sum()
    return total, math.sqrt(var)


def normalize(components, theta: float, d: int, quadrature_spec: dict | None = None, name: str = "custom") -> TruncatedMixture:
    """Build a normalized truncated mixture.

    ``quadrature_spec`` may carry ``epsabs``/``epsrel`` for d <= 2 and
    ``seed``/``per_stratum``/``strata_per_axis`` for the Monte Carlo route used when d >= 3.
    """
    spec = dict(quadrature_spec or {})
    comps = tuple(
        c if isinstance(c, GaussianComponent) else GaussianComponent(c["weight"], tuple(c["mean"]), c["std"])
        for c in components
    )
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if any(len(c.mean) != d for c in comps):
        raise ValueError("component means must have length d")
    wsum = sum(c.weight for c in comps)
    if abs(wsum - 1.0) > 1e-12:
        raise ValueError(f"component weights sum to {wsum!r}, expected 1")
    box = _initial_box(comps, d)
    box, raw_min = _tighten_box(comps, theta, box)
    box = tuple((float(a), float(b)) for a, b in box)

    stderr = 0.0
    if d <= 2:
        unnormalized = TruncatedMixture(d, comps, float(theta), 1.0, box, name)
        z, _ = quadrature.box_integral(
            unnormalized, powers=(1.0,), epsabs=spec.get("epsabs", 1e-12), epsrel=spec.get("epsrel", 1e-11)
        )
        z = float(z[0])
    else:
        z, stderr = _stratified_mc_mass(
            comps, theta, box, spec.get("seed", 0), spec.get("per_stratum", 64), spec.get("strata_per_axis", 8)
        )
    if not z > 0:
        raise EmptySupport("supported mass is zero")
    return TruncatedMixture(d, comps, float(theta), z, box, name, stderr, raw_min / z)


def evaluate(density, point) -> float | np.ndarray:
    """Density value(s); a single point returns a float."""
    x = np.asarray(point, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim == 1:
        if x.shape[0] != density.dim:
            x = x[:, None]
        else:
            return float(density.pdf(x[None, :])[0])
    return density.pdf(x)


def sample(density, n: int, seed: int) -> SampleSet:
    """Draw ``n`` i.i.d. points; mixtures use rejection from the untruncated mixture."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    name = getattr(density, "name", "custom")
    if isinstance(density, UniformBox):
        lo, hi = np.asarray(density.lower), np.asarray(density.upper)
        return SampleSet(lo + (hi - lo) * rng.random((n, density.dim)), seed, name)

    comps = density.components
    weights = np.array([c.weight for c in comps])
    means = np.array([c.mean for c in comps])
    stds = np.array([c.std for c in comps])
    accepted = []
    n_acc = 0
    proposals = 0
    batch = max(1024, 2 * n)
    while n_acc < n:
        which = rng.choice(len(comps), size=batch, p=weights)
        x = means[which] + stds[which, None] * rng.standard_normal((batch, density.dim))
        keep = density.in_support(x)
        proposals += batch
        accepted.append(x[keep])
        n_acc += int(keep.sum())
        if proposals >= _MAX_PROPOSALS_CHECK and n_acc / proposals < _MIN_ACCEPTANCE:
            raise RejectionStall(f"acceptance rate {n_acc / proposals:.2e} after {proposals} proposals")
        rate = max(n_acc / proposals, _MIN_ACCEPTANCE)
        batch = int(min(max(1024, 1.2 * (n - n_acc) / rate), 4_000_000))
    return SampleSet(np.concatenate(accepted)[:n], seed, name)


def _mixture_preset(d, means, stds, weights, theta, name):
    comps = [
        GaussianComponent(w, (m,) + (0.0,) * (d - 1), s) for m, s, w in zip(means, stds, weights)
    ]
    return dict(components=comps, theta=theta, d=d, name=name)


# the three mixtures from the experiments; stds are per-axis standard deviations
PRESETS = {
    "example1": _mixture_preset(1, (0.0, 0.5, 1.0), (0.4, 0.1, 0.1), (0.66, 0.17, 0.17), 0.1, "example1"),
    "example2": _mixture_preset(2, (-1.1, 0.0, 1.3), (0.2, 0.4, 0.1), (0.4, 0.55, 0.05), 0.01, "example2"),
    "example3": _mixture_preset(1, (0.2, 0.4), (0.05, 0.03), (0.8, 0.2), 0.1, "example3"),
}
_REFERENCE = {
    "uniform": lambda: UniformBox((0.0,), (1.0,), "uniform"),
    "uniform1d": lambda: UniformBox((0.0,), (1.0,), "uniform1d"),
    "uniform2d": lambda: UniformBox((0.0, 0.0), (1.0, 1.0), "uniform2d"),
}
_cache: dict[str, object] = {}


def get_density(name: str):
    """Named preset, normalized once and cached."""
    if name not in _cache:
        if name in PRESETS:
            _cache[name] = normalize(**PRESETS[name])
        elif name in _REFERENCE:
            _cache[name] = _REFERENCE[name]()
        else:
            raise KeyError(f"unknown density preset {name!r}")
    return _cache[name]


def density_from_dict(spec):
    """Density from a preset name or a ``{dim, components, theta}`` mapping."""
    if isinstance(spec, str):
        return get_density(spec)
    if "preset" in spec:
        return get_density(spec["preset"])
    if "uniform" in spec:
        u = spec["uniform"]
        return UniformBox(tuple(u["lower"]), tuple(u["upper"]), spec.get("name", "uniform"))
    comps = [GaussianComponent(c["weight"], tuple(c["mean"]), c["std"]) for c in spec["components"]]
    return normalize(comps, float(spec["theta"]), int(spec["dim"]), spec.get("quadrature"), spec.get("name", "custom"))


def load_density(path):
    return density_from_dict(json.loads(Path(path).read_text()))
