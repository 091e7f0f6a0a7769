import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from ncutlab.experiments import minimal_matching_distance
from ncutlab.graph import GraphSpec, NeighborhoodGraph, build_knn, build_r_graph
from ncutlab.quality import ncut
from ncutlab.spectral import (
    IsolatedNode,
    NoConvergence,
    SpectralConfig,
    discretize,
    normalized_laplacian,
    spectral_bipartition,
)
import oracles

SPEC = GraphSpec("r_neighborhood", r=1.0)


def from_dense(W):
    i, j = np.nonzero(np.triu(W, 1))
    return NeighborhoodGraph(W.shape[0], False, i, j, W[i, j], SPEC)


def two_cliques(size=4, bridge=1e-3):
    n = 2 * size
    W = np.zeros((n, n))
    W[:size, :size] = 1.0
    W[size:, size:] = 1.0
    np.fill_diagonal(W, 0.0)
    W[size - 1, size] = W[size, size - 1] = bridge
    return W


def test_triangle_spectrum():
    W = np.ones((3, 3)) - np.eye(3)
    L, _ = normalized_laplacian(from_dense(W))
    assert np.linalg.eigvalsh(L.toarray()) == pytest.approx([0.0, 1.5, 1.5], abs=1e-12)


def test_two_disjoint_edges_double_zero():
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 0] = W[2, 3] = W[3, 2] = 1.0
    vals = np.linalg.eigvalsh(normalized_laplacian(from_dense(W))[0].toarray())
    assert np.sum(np.abs(vals) < 1e-12) == 2


def test_null_vector_and_spectrum_range():
    rng = np.random.default_rng(0)
    W = rng.random((15, 15))
    W = np.triu(W, 1)
    W = W + W.T
    L, deg = normalized_laplacian(from_dense(W))
    v = np.sqrt(deg)
    assert v @ (L @ v) == pytest.approx(0.0, abs=1e-12)
    vals = np.linalg.eigvalsh(L.toarray())
    assert vals.min() >= -1e-12 and vals.max() <= 2 + 1e-12


def test_isolated_node():
    W = np.zeros((3, 3))
    W[0, 1] = W[1, 0] = 1.0
    with pytest.raises(IsolatedNode):
        normalized_laplacian(from_dense(W))


def test_two_cliques_recovered_and_brute_force_agrees():
    W = two_cliques()
    res = spectral_bipartition(from_dense(W))
    best, arg = oracles.exhaustive_min_ncut(W)
    assert minimal_matching_distance(res.labels, arg) == 0.0
    assert res.labels[:4].all() != res.labels[4:].all()
    assert res.ncut == pytest.approx(best, rel=1e-12)


def test_swap_symmetric_graph_gives_equal_sides():
    # two equal cliques joined by a bridge; the swap of the cliques is an automorphism
    W = two_cliques(size=5, bridge=0.5)
    for method in ("kmeans", "best_ncut", "sign"):
        res = spectral_bipartition(from_dense(W), SpectralConfig(discretization=method))
        assert res.labels.sum() == 5


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_planted_gaussians():
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.normal(-3, 0.3, 100), rng.normal(3, 0.3, 100)])
    res = spectral_bipartition(build_knn(x, 10), points=x[:, None])
    assert minimal_matching_distance(res.labels, x > 0) <= 0.02


def test_residual_within_tolerance():
    rng = np.random.default_rng(1)
    x = rng.random((300, 2))
    g = build_knn(x, 10)
    conf = SpectralConfig()
    res = spectral_bipartition(g, conf)
    assert res.connected
    assert res.residual <= conf.eig_tolerance


def test_best_ncut_threshold_is_optimal_along_ordering():
    rng = np.random.default_rng(2)
    x = rng.random((150, 1))
    g = build_knn(x, 8)
    conf = SpectralConfig(discretization="best_ncut")
    res = spectral_bipartition(g, conf)
    # recompute every threshold cut along the same embedding
    L, deg = normalized_laplacian(g)
    vals, vecs = np.linalg.eigh(L.toarray())
    score = vecs[:, 1] / np.sqrt(deg)
    if np.corrcoef(score, res.labels)[0, 1] < 0:
        score = -score
    order = np.lexsort((np.arange(150), score))
    W = g.adjacency().toarray()
    best = min(oracles.ncut_dense(W, np.isin(np.arange(150), order[m:])) for m in range(1, 150))
    assert res.ncut == pytest.approx(best, rel=1e-9)
    assert ncut(g, res.labels).ncut == pytest.approx(res.ncut, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(4, 10), method=st.sampled_from(["kmeans", "best_ncut", "sign"]))
def test_relaxation_never_beats_exhaustive(seed, n, method):
    rng = np.random.default_rng(seed)
    W = np.triu(rng.random((n, n)) + 0.05, 1)
    W = W + W.T
    res = spectral_bipartition(from_dense(W), SpectralConfig(discretization=method))
    best, _ = oracles.exhaustive_min_ncut(W)
    assert res.ncut >= best * (1 - 1e-12)
    assert oracles.ncut_dense(W, res.labels) == pytest.approx(res.ncut, rel=1e-9)


def test_discretize_kmeans_matches_bruteforce():
    rng = np.random.default_rng(3)
    score = np.concatenate([rng.normal(0, 1, 20), rng.normal(5, 1, 10)])
    n = score.size
    W = sp.csr_matrix(np.ones((n, n)) - np.eye(n))
    labels, _, m = discretize(W, np.full(n, n - 1.0), score, "kmeans")
    s = np.sort(score)
    costs = [np.var(s[:k]) * k + np.var(s[k:]) * (n - k) for k in range(1, n)]
    assert m == int(np.argmin(costs)) + 1
    assert labels.sum() == n - m


def test_disconnected_components_split():
    W = two_cliques(bridge=0.0)
    with pytest.warns(RuntimeWarning):
        res = spectral_bipartition(from_dense(W))
    assert not res.connected and res.n_components == 2
    assert minimal_matching_distance(res.labels, np.arange(8) < 4) == 0.0


def test_small_fragment_is_attached_to_nearest():
    rng = np.random.default_rng(4)
    x = np.sort(np.concatenate([rng.normal(0, 0.3, 150), rng.normal(1.2, 0.3, 150)]))
    x = np.concatenate([x, [10.0, 10.1]])  # a far-away pair forms its own component
    g = build_r_graph(x, 0.3)
    with pytest.warns(RuntimeWarning):
        res = spectral_bipartition(g, points=x[:, None])
    assert res.meta["split"] == "largest_component"
    assert res.meta["n_stragglers"] == 2
    assert res.labels[-1] == res.labels[-3]


def test_config_validation():
    with pytest.raises(ValueError):
        SpectralConfig(eig_tolerance=0.0)
    with pytest.raises(ValueError):
        SpectralConfig(discretization="spectral_rotation")


def test_no_convergence_reported():
    rng = np.random.default_rng(5)
    x = rng.random((400, 2))
    with pytest.raises(NoConvergence):
        spectral_bipartition(build_knn(x, 10), SpectralConfig(max_iterations=1, eig_tolerance=1e-30))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_directed_input_symmetrized():
    x = np.random.default_rng(6).random((100, 1))
    a = spectral_bipartition(build_knn(x, 5, "directed"))
    b = spectral_bipartition(build_knn(x, 5, "symmetric"))
    assert np.array_equal(a.labels, b.labels)


def test_record_fields():
    rec = spectral_bipartition(from_dense(two_cliques())).record()
    assert {"lambda2", "ncut", "threshold_index"} <= set(rec)
