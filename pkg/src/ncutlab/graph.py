"""Neighborhood graphs on sample points: kNN (directed, symmetric, mutual), r-graphs, complete graphs.

Edges are kept as a coordinate list ``(i, j, w)``.  Undirected graphs store each
unordered pair once with ``i < j``.  Neighbor queries go through a kd-tree but
every distance is recomputed with :func:`pair_distances`, so the edge sets and
weights agree exactly with a brute-force construction using the same formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

KNN_KINDS = ("knn_directed", "knn_symmetric", "knn_mutual")
GRAPH_KINDS = KNN_KINDS + ("r_neighborhood", "complete")
REGIMES = ("r_dominates_sigma", "sigma_dominates_r")


class KTooLarge(ValueError):
    pass


class UnitWeightOnComplete(ValueError):
    pass


@dataclass(frozen=True)
class WeightFunction:
    kind: str = "unit"
    sigma: float | None = None
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("unit", "gaussian"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "gaussian" and not (self.sigma is not None and self.sigma > 0):
            raise ValueError("gaussian weight needs sigma > 0")
        if self.dim < 1:
            raise ValueError("dim must be positive")

    @property
    def peak(self) -> float:
        if self.kind == "unit":
            return 1.0
        return (2.0 * math.pi * self.sigma**2) ** (-self.dim / 2.0)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "unit":
            return np.ones_like(u)
        return self.peak * np.exp(-0.5 * u**2 / self.sigma**2)


@dataclass(frozen=True)
class GraphSpec:
    kind: str
    k: int | None = None
    r: float | None = None
    weight: WeightFunction = WeightFunction()
    # only read by the scaling sequences for gaussian kNN / r-graphs
    regime: str | None = None

    def __post_init__(self):
        if self.kind not in GRAPH_KINDS:
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.kind in KNN_KINDS and not (self.k is not None and self.k >= 1):
            raise ValueError("kNN graphs need k >= 1")
        if self.kind == "r_neighborhood" and not (self.r is not None and self.r > 0):
            raise ValueError("r-graphs need r > 0")
        if self.kind == "complete" and self.weight.kind != "gaussian":
            raise UnitWeightOnComplete("the complete graph is only defined with gaussian weights")
        if self.regime is not None and self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")


@dataclass(frozen=True, eq=False)
class NeighborhoodGraph:
    n: int
    directed: bool
    i: np.ndarray
    j: np.ndarray
    w: np.ndarray
    spec: GraphSpec

    @property
    def edges(self):
        return list(zip(self.i.tolist(), self.j.tolist(), self.w.tolist()))

    @property
    def n_edges(self) -> int:
        return int(self.i.size)

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric weight matrix; directed kNN graphs are symmetrized to the symmetric kNN graph."""
        i, j, w = self.i, self.j, self.w
        if self.directed:
            lo, hi = np.minimum(i, j), np.maximum(i, j)
            key, first = np.unique(lo.astype(np.int64) * self.n + hi, return_index=True)
            i, j, w = lo[first], hi[first], w[first]
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        vals = np.concatenate([w, w])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def symmetrized(self) -> "NeighborhoodGraph":
        if not self.directed:
            return self
        lo, hi = np.minimum(self.i, self.j), np.maximum(self.i, self.j)
        _, first = np.unique(lo.astype(np.int64) * self.n + hi, return_index=True)
        spec = GraphSpec("knn_symmetric", self.spec.k, None, self.spec.weight, self.spec.regime)
        return NeighborhoodGraph(self.n, False, lo[first], hi[first], self.w[first], spec)

    def dump_csv(self, path) -> None:
        with open(Path(path), "w") as fh:
            fh.write(f"# n={self.n} directed={int(self.directed)} kind={self.spec.kind}\n")
            for a, b, c in zip(self.i.tolist(), self.j.tolist(), self.w.tolist()):
                fh.write(f"{a},{b},{c:.17g}\n")


def load_graph_csv(path, spec: GraphSpec | None = None) -> NeighborhoodGraph:
    with open(Path(path)) as fh:
        header = fh.readline().lstrip("#").split()
        meta = dict(item.split("=", 1) for item in header)
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = np.zeros((0, 3))
    if spec is None:
        kind = meta["kind"]
        spec = GraphSpec(kind, k=1 if kind in KNN_KINDS else None, r=1.0 if kind == "r_neighborhood" else None,
                         weight=WeightFunction("gaussian", 1.0) if kind == "complete" else WeightFunction())
    return NeighborhoodGraph(int(meta["n"]), meta["directed"] == "1", data[:, 0].astype(np.int64),
                             data[:, 1].astype(np.int64), data[:, 2].astype(float), spec)


def pair_distances(points: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Euclidean distances between rows ``i`` and ``j``; the single formula used everywhere."""
    diff = points[i] - points[j]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def knn_neighbors(points, k: int):
    """Indices and distances of the k nearest neighbors of every point.

    Self is excluded; ties in distance go to the smaller index.  Returns two
    (n, k) arrays sorted by (distance, index) along each row.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if not 1 <= k <= n - 1:
        raise KTooLarge(f"need 1 <= k <= n-1, got k={k}, n={n}")
    tree = cKDTree(pts)
    out_idx = np.empty((n, k), dtype=np.int64)
    out_dist = np.empty((n, k))
    todo = np.arange(n)
    m = min(n, k + 1 + max(4, k // 8))
    while todo.size:
        _, cand = tree.query(pts[todo], m)
        cand = np.asarray(cand, dtype=np.int64).reshape(todo.size, m)
        rows = np.repeat(todo, m).reshape(todo.size, m)
        dist = pair_distances(pts, rows, cand)
        self_hit = cand == rows
        dist = np.where(self_hit, np.inf, dist)
        order = np.lexsort((cand, dist), axis=1)
        sd = np.take_along_axis(dist, order, axis=1)
        sc = np.take_along_axis(cand, order, axis=1)
        kth = sd[:, k - 1]
        # every point at distance <= kth must be a candidate: the farthest candidate
        # (self excluded) has to lie strictly beyond kth, unless all points were queried
        far = np.max(np.where(self_hit, -np.inf, dist), axis=1)
        ok = (m == n) | (far > kth * (1 + 1e-9) + 1e-300)
        out_idx[todo[ok]] = sc[ok, :k]
        out_dist[todo[ok]] = sd[ok, :k]
        todo = todo[~ok]
        m = min(n, 2 * m)
    return out_idx, out_dist


def _undirected(n, i, j, keep_pairs_seen_twice=False):
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    key = lo.astype(np.int64) * n + hi
    uniq, counts = np.unique(key, return_counts=True)
    if keep_pairs_seen_twice:
        uniq = uniq[counts == 2]
    return uniq // n, uniq % n


def build_knn(points, k: int, variant: str = "symmetric", weight: WeightFunction | None = None) -> NeighborhoodGraph:
    """kNN graph; ``variant`` is one of directed, symmetric, mutual."""
    pts = _as_points(points)
    n = pts.shape[0]
    weight = weight or WeightFunction("unit", dim=pts.shape[1])
    kind = variant if variant.startswith("knn_") else f"knn_{variant}"
    spec = GraphSpec(kind, k=k, weight=weight)
    idx, dist = knn_neighbors(pts, k)
    src = np.repeat(np.arange(n, dtype=np.int64), k)
    dst = idx.ravel()
    if kind == "knn_directed":
        order = np.lexsort((dst, src))
        i, j = src[order], dst[order]
        return NeighborhoodGraph(n, True, i, j, weight(pair_distances(pts, i, j)), spec)
    i, j = _undirected(n, src, dst, keep_pairs_seen_twice=(kind == "knn_mutual"))
    return NeighborhoodGraph(n, False, i, j, weight(pair_distances(pts, i, j)), spec)


def build_r_graph(points, r: float, weight: WeightFunction | None = None) -> NeighborhoodGraph:
    """Undirected graph with an edge whenever two points are at distance <= r."""
    pts = _as_points(points)
    n = pts.shape[0]
    weight = weight or WeightFunction("unit", dim=pts.shape[1])
    spec = GraphSpec("r_neighborhood", r=r, weight=weight)
    pairs = cKDTree(pts).query_pairs(r * (1 + 1e-9) + 1e-300, output_type="ndarray")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        i, j = pairs[:, 0], pairs[:, 1]
        dist = pair_distances(pts, i, j)
        keep = dist <= r
        i, j, dist = i[keep], j[keep], dist[keep]
        order = np.lexsort((j, i))
        i, j, dist = i[order], j[order], dist[order]
    else:
        i = j = np.zeros(0, dtype=np.int64)
        dist = np.zeros(0)
    return NeighborhoodGraph(n, False, i, j, weight(dist), spec)


def build_complete(points, weight: WeightFunction) -> NeighborhoodGraph:
    if weight.kind != "gaussian":
        raise UnitWeightOnComplete("the complete graph is only defined with gaussian weights")
    pts = _as_points(points)
    n = pts.shape[0]
    i, j = np.triu_indices(n, 1)
    i, j = i.astype(np.int64), j.astype(np.int64)
    return NeighborhoodGraph(n, False, i, j, weight(pair_distances(pts, i, j)), GraphSpec("complete", weight=weight))


def build_graph(points, spec: GraphSpec) -> NeighborhoodGraph:
    if spec.kind in KNN_KINDS:
        g = build_knn(points, spec.k, spec.kind, spec.weight)
    elif spec.kind == "r_neighborhood":
        g = build_r_graph(points, spec.r, spec.weight)
    else:
        g = build_complete(points, spec.weight)
    if spec.regime is not None:
        g = NeighborhoodGraph(g.n, g.directed, g.i, g.j, g.w, spec)
    return g


def mean_knn_radius(points, k: int) -> float:
    """Mean distance from each point to its k-th nearest neighbor."""
    _, dist = knn_neighbors(points, k)
    return float(np.mean(dist[:, k - 1]))
