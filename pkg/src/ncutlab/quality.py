"""Cut, volume, Ncut and Cheeger cut of hyperplane-induced partitions, plus scaling sequences.

Partitions are boolean arrays: ``True`` marks the ``+`` side.  Sums of edge
weights use ``math.fsum`` so that results do not depend on edge order and
match an independent recomputation exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .graph import KNN_KINDS, GraphSpec, NeighborhoodGraph


class ZeroVolume(ValueError):
    pass


class RegimeUnspecified(ValueError):
    pass


@dataclass(frozen=True)
class Hyperplane:
    """The plane ``<normal, x> = offset``; points with ``<normal, x> >= offset`` form H+."""

    normal: tuple[float, ...]
    offset: float

    def __post_init__(self):
        normal = tuple(float(v) for v in np.atleast_1d(self.normal))
        if abs(math.sqrt(math.fsum(v * v for v in normal)) - 1.0) > 1e-12:
            raise ValueError("hyperplane normal must have unit length")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_normal(cls, normal, offset: float) -> "Hyperplane":
        v = np.asarray(normal, dtype=float)
        norm = float(np.linalg.norm(v))
        return cls(tuple(v / norm), offset / norm)

    @classmethod
    def axis_aligned(cls, dim: int, axis: int, offset: float) -> "Hyperplane":
        normal = [0.0] * dim
        normal[axis] = 1.0
        return cls(tuple(normal), offset)

    @property
    def dim(self) -> int:
        return len(self.normal)

    @property
    def axis(self) -> int | None:
        """Index of the coordinate axis the normal points along, if any."""
        nz = [a for a, v in enumerate(self.normal) if v != 0.0]
        if len(nz) == 1 and self.normal[nz[0]] == 1.0:
            return nz[0]
        return None

    def project(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return pts @ np.asarray(self.normal)


def induce_partition(points, hyperplane: Hyperplane) -> np.ndarray:
    """Boolean labels, True on H+ (points on the plane included)."""
    return hyperplane.project(points) >= hyperplane.offset


def _exact_sum(graph: NeighborhoodGraph, w: np.ndarray) -> float:
    if graph.spec.weight.kind == "unit":
        return float(w.size)
    return math.fsum(w.tolist())


def _check(graph, labels):
    labels = np.asarray(labels, dtype=bool)
    if labels.shape != (graph.n,):
        raise ValueError(f"labels have shape {labels.shape}, graph has {graph.n} nodes")
    return labels


def cut(graph: NeighborhoodGraph, labels) -> float:
    """Weight of edges crossing the partition; undirected edges count twice."""
    labels = _check(graph, labels)
    crossing = labels[graph.i] != labels[graph.j]
    total = _exact_sum(graph, graph.w[crossing])
    return total if graph.directed else 2.0 * total


def volume(graph: NeighborhoodGraph, labels, side: bool = True) -> float:
    """Total weight of edges originating in the chosen side."""
    labels = _check(graph, labels)
    from_i = graph.w[labels[graph.i] == side]
    if graph.directed:
        return _exact_sum(graph, from_i)
    from_j = graph.w[labels[graph.j] == side]
    return _exact_sum(graph, np.concatenate([from_i, from_j]))


def scaling_factors(spec: GraphSpec, n: int, d: int) -> tuple[float, float]:
    """The normalizers (s_cut, s_vol) for a graph on n points in R^d."""
    n2 = float(n) ** 2
    weight = spec.weight
    if spec.kind == "complete":
        return n2 * weight.sigma, n2
    if spec.kind in KNN_KINDS:
        radius = (spec.k / n) ** (1.0 / d)
    else:
        radius = spec.r
    if weight.kind == "unit":
        return n2 * radius ** (d + 1), n2 * radius**d
    if spec.regime is None:
        raise RegimeUnspecified("gaussian kNN/r-graphs need regime r_dominates_sigma or sigma_dominates_r")
    sigma = weight.sigma
    if spec.regime == "r_dominates_sigma":
        return n2 * sigma, n2
    corr = sigma ** (-d)
    return corr * n2 * radius ** (d + 1), corr * n2 * radius**d


@dataclass(frozen=True)
class QualityReport:
    cut: float
    vol_plus: float
    vol_minus: float
    ncut: float
    cheeger: float
    scaled_ncut: float
    scaled_cheeger: float
    s_cut: float
    s_vol: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps({k: float(f"{v:.17g}") for k, v in asdict(self).items()}, indent=2)

    @staticmethod
    def csv_header() -> str:
        return "cut,vol_plus,vol_minus,ncut,cheeger,scaled_ncut,scaled_cheeger,s_cut,s_vol"

    def csv_line(self) -> str:
        return ",".join(f"{v:.17g}" for v in asdict(self).values())


def ncut(graph: NeighborhoodGraph, labels, d: int | None = None, scaling: tuple[float, float] | None = None) -> QualityReport:
    """Ncut and Cheeger cut of a partition, with their scaled versions.

    The scaling pair comes from :func:`scaling_factors` on the graph's spec unless
    given explicitly; ``d`` defaults to 1 when neither is available.
    """
    labels = _check(graph, labels)
    c = cut(graph, labels)
    vp = volume(graph, labels, True)
    vm = volume(graph, labels, False)
    if vp == 0.0 or vm == 0.0:
        raise ZeroVolume(f"a side has zero volume (vol+={vp}, vol-={vm})")
    nc = c * (1.0 / vp + 1.0 / vm)
    ch = c / min(vp, vm)
    if scaling is None:
        try:
            scaling = scaling_factors(graph.spec, graph.n, d or graph.spec.weight.dim)
        except RegimeUnspecified:
            scaling = (float("nan"), float("nan"))
    s_cut, s_vol = scaling
    ratio = s_vol / s_cut
    return QualityReport(c, vp, vm, nc, ch, ratio * nc, ratio * ch, s_cut, s_vol)
