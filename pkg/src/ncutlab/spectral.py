"""Two-way normalized spectral clustering with a best-Ncut sweep along the second eigenvector."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.spatial import cKDTree

from .graph import NeighborhoodGraph


class IsolatedNode(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralConfig:
    eig_tolerance: float = 1e-8
    max_iterations: int = 10_000
    embed: str = "second_eigenvector"
    # how the embedding is cut in two: exact 1-D 2-means, best Ncut threshold, or sign
    discretization: str = "kmeans"
    # disconnected graphs: if the runner-up component holds at least this share of
    # the nodes the components themselves are the clusters, otherwise the largest
    # component is clustered and the stragglers attached to it
    component_fraction: float = 0.05
    # shift for the shift-invert Lanczos iteration; must lie below the spectrum
    shift: float = -1e-3

    def __post_init__(self):
        if not self.eig_tolerance > 0:
            raise ValueError("eig_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.embed != "second_eigenvector":
            raise ValueError("only the second-eigenvector embedding is supported")
        if self.discretization not in ("kmeans", "best_ncut", "sign"):
            raise ValueError(f"unknown discretization {self.discretization!r}")


@dataclass
class SpectralResult:
    labels: np.ndarray
    lambda2: float
    ncut: float
    threshold_index: int
    connected: bool = True
    n_components: int = 1
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {
            "lambda2": float(self.lambda2),
            "ncut": float(self.ncut),
            "threshold_index": int(self.threshold_index),
            "connected": bool(self.connected),
            "n_components": int(self.n_components),
            "residual": float(self.residual),
            **self.meta,
        }


def normalized_laplacian(graph: NeighborhoodGraph) -> tuple[sp.csr_matrix, np.ndarray]:
    """L = I - D^{-1/2} W D^{-1/2} and the degree vector."""
    W = graph.adjacency()
    deg = np.asarray(W.sum(axis=1)).ravel()
    if np.any(deg <= 0):
        raise IsolatedNode(f"{int(np.sum(deg <= 0))} node(s) have zero degree")
    dinv = sp.diags(1.0 / np.sqrt(deg))
    L = sp.identity(graph.n, format="csr") - dinv @ W @ dinv
    return sp.csr_matrix(L), deg


def _second_eigenpair(L, deg, config: SpectralConfig, seed: int):
    n = L.shape[0]
    if n <= 3:
        vals, vecs = np.linalg.eigh(L.toarray())
        return float(vals[1]), vecs[:, 1]
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    try:
        vals, vecs = eigsh(L, k=2, sigma=config.shift, which="LM", v0=v0,
                           tol=config.eig_tolerance * 1e-2, maxiter=config.max_iterations)
    except ArpackNoConvergence as exc:
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(vals)
    lam, v = float(vals[order[1]]), vecs[:, order[1]]
    # remove any leftover of the trivial eigenvector D^{1/2} 1
    null = np.sqrt(deg)
    null /= np.linalg.norm(null)
    v = v - (null @ v) * null
    v /= np.linalg.norm(v)
    lam = float(v @ (L @ v))
    return lam, v


def _split_curves(W: sp.csr_matrix, deg: np.ndarray, order: np.ndarray):
    """Cut, left volume and Ncut of the n-1 prefix splits of ``order``."""
    n = order.size
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    coo = sp.triu(W, k=1).tocoo()
    lo = np.minimum(pos[coo.row], pos[coo.col])
    hi = np.maximum(pos[coo.row], pos[coo.col])
    # an edge crosses split m (first m nodes vs rest) iff lo < m <= hi; counted twice
    delta = np.zeros(n + 1)
    np.add.at(delta, lo + 1, 2.0 * coo.data)
    np.add.at(delta, hi + 1, -2.0 * coo.data)
    cut = np.cumsum(delta)[1:n]
    vol_left = np.cumsum(deg[order])[: n - 1]
    vol_right = deg.sum() - vol_left
    with np.errstate(divide="ignore", invalid="ignore"):
        ncut = cut * (1.0 / vol_left + 1.0 / vol_right)
    return np.where((vol_left > 0) & (vol_right > 0), ncut, np.inf)


def _kmeans_split(sorted_scores: np.ndarray) -> int:
    """Prefix length of the optimal 2-means split of sorted 1-D values."""
    n = sorted_scores.size
    c1 = np.cumsum(sorted_scores)
    c2 = np.cumsum(sorted_scores**2)
    m = np.arange(1, n)
    left = c2[:-1] - c1[:-1] ** 2 / m
    right = (c2[-1] - c2[:-1]) - (c1[-1] - c1[:-1]) ** 2 / (n - m)
    return int(np.argmin(left + right)) + 1


def discretize(W: sp.csr_matrix, deg: np.ndarray, score: np.ndarray, method: str = "kmeans"):
    """Split nodes sorted by ``score`` into a prefix (False) and the rest (True).

    Returns (labels, ncut of the split, prefix length).
    """
    n = score.size
    order = np.lexsort((np.arange(n), score))
    ncut = _split_curves(W, deg, order)
    if method == "best_ncut":
        m = int(np.argmin(ncut)) + 1
    elif method == "kmeans":
        m = _kmeans_split(score[order])
    else:
        m = max(1, min(n - 1, int(np.sum(score[order] <= 0.0))))
    labels = np.zeros(n, dtype=bool)
    labels[order[m:]] = True
    return labels, float(ncut[m - 1]), m


def _attach_stragglers(labels, assigned, points):
    """Give unassigned nodes the label of their nearest assigned node (or False without points)."""
    if assigned.all():
        return labels
    out = labels.copy()
    if points is None:
        out[~assigned] = False
        return out
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    _, nearest = cKDTree(pts[assigned]).query(pts[~assigned])
    out[~assigned] = labels[np.flatnonzero(assigned)[nearest]]
    return out


def _spectral_connected(g, W, config, seed):
    L, deg = normalized_laplacian(g)
    lam, v = _second_eigenpair(L, deg, config, seed)
    residual = float(np.linalg.norm(L @ v - lam * v))
    if residual > config.eig_tolerance * np.linalg.norm(v):
        raise NoConvergence(f"eigen-residual {residual:.3e} above tolerance {config.eig_tolerance:.1e}")
    score = v / np.sqrt(deg)
    labels, nc, m = discretize(W, deg, score, config.discretization)
    return labels, lam, nc, m, residual


def spectral_bipartition(graph: NeighborhoodGraph, config: SpectralConfig | None = None, seed: int = 0,
                         points=None) -> SpectralResult:
    """Split the nodes in two by normalized spectral clustering.

    Directed graphs are symmetrized first.  For disconnected graphs the result is
    flagged (``connected=False``): when the second largest component is big
    enough the two largest components are the clusters, otherwise the largest
    component is clustered spectrally.  Nodes left over are attached to their
    nearest labeled node when ``points`` is given.
    """
    config = config or SpectralConfig()
    g = graph.symmetrized()
    if g.n < 2:
        raise ValueError("need at least two nodes")
    W = g.adjacency()
    n_comp, comp = csgraph.connected_components(W, directed=False)
    if n_comp == 1:
        labels, lam, nc, m, residual = _spectral_connected(g, W, config, seed)
        return SpectralResult(labels, lam, nc, m, residual=residual, meta={"discretization": config.discretization})

    sizes = np.bincount(comp)
    ranked = np.argsort(-sizes, kind="stable")
    warnings.warn(f"graph has {n_comp} connected components", RuntimeWarning)
    if sizes[ranked[1]] >= config.component_fraction * g.n or sizes[ranked[0]] < 3:
        labels = comp == ranked[0]
        assigned = (comp == ranked[0]) | (comp == ranked[1])
        labels = _attach_stragglers(labels, assigned, points)
        return SpectralResult(labels, 0.0, 0.0, -1, connected=False, n_components=n_comp,
                              meta={"split": "components", "n_stragglers": int((~assigned).sum())})

    keep = np.flatnonzero(comp == ranked[0])
    remap = -np.ones(g.n, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    inside = (remap[g.i] >= 0) & (remap[g.j] >= 0)
    sub = NeighborhoodGraph(keep.size, False, remap[g.i[inside]], remap[g.j[inside]], g.w[inside], g.spec)
    sub_labels, lam, nc, m, residual = _spectral_connected(sub, sub.adjacency(), config, seed)
    labels = np.zeros(g.n, dtype=bool)
    labels[keep] = sub_labels
    assigned = np.zeros(g.n, dtype=bool)
    assigned[keep] = True
    labels = _attach_stragglers(labels, assigned, points)
    return SpectralResult(labels, lam, nc, m, connected=False, n_components=n_comp, residual=residual,
                          meta={"split": "largest_component", "n_stragglers": int(g.n - keep.size),
                                "discretization": config.discretization})
