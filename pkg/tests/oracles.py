"""Independent reference computations used as test oracles.

Everything here is deliberately naive: O(n^2) loops, dense matrices, exhaustive
enumeration.  Distances use the same formula as the package so that exact
equality is a fair requirement.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def dist(p, q) -> float:
    diff = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    return float(np.sqrt(np.sum(diff * diff)))


def knn_lists(points, k):
    """Sorted (distance, index) neighbor lists by full enumeration."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 1 or np.ndim(points) == 1:
        pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    n = pts.shape[0]
    out = []
    for i in range(n):
        cand = sorted((dist(pts[i], pts[j]), j) for j in range(n) if j != i)
        out.append([j for _, j in cand[:k]])
    return out


def directed_knn_edges(points, k):
    return {(i, j) for i, nb in enumerate(knn_lists(points, k)) for j in nb}


def symmetric_knn_edges(points, k):
    return {(min(i, j), max(i, j)) for i, j in directed_knn_edges(points, k)}


def mutual_knn_edges(points, k):
    d = directed_knn_edges(points, k)
    return {(i, j) for i, j in d if i < j and (j, i) in d}


def r_edges(points, r):
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    n = pts.shape[0]
    return {(i, j) for i in range(n) for j in range(i + 1, n) if dist(pts[i], pts[j]) <= r}


def cut_volume(points, edges, weight, labels, directed):
    """cut, vol(+), vol(-) from an edge set and raw points, with fsum."""
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    crossing, plus, minus = [], [], []
    for i, j in sorted(edges):
        w = float(weight(np.array(dist(pts[i], pts[j]))))
        ends = [i] if directed else [i, j]
        if labels[i] != labels[j]:
            crossing.append(w)
        for e in ends:
            (plus if labels[e] else minus).append(w)
    factor = 1.0 if directed else 2.0
    return factor * math.fsum(crossing), math.fsum(plus), math.fsum(minus)


def ncut_dense(W, labels) -> float:
    W = np.asarray(W, dtype=float)
    a = np.asarray(labels, dtype=bool)
    deg = W.sum(axis=1)
    c = 2.0 * W[np.ix_(a, ~a)].sum()
    vp, vm = deg[a].sum(), deg[~a].sum()
    if vp == 0 or vm == 0:
        return math.inf
    return c * (1.0 / vp + 1.0 / vm)


def exhaustive_min_ncut(W):
    """Minimum Ncut over all 2^(n-1)-1 nontrivial bipartitions."""
    n = W.shape[0]
    best, arg = math.inf, None
    for bits in itertools.product([False, True], repeat=n - 1):
        labels = np.array((False,) + bits)
        if not labels.any():
            continue
        v = ncut_dense(W, labels)
        if v < best:
            best, arg = v, labels
    return best, arg


def adaptive_simpson(f, a, b, tol=1e-12, depth=60):
    """Classic recursive adaptive Simpson rule."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15.0
        return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1)

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)


def mixture_raw_1d(x, weights, means, stds) -> float:
    return sum(w * math.exp(-0.5 * ((x - m) / s) ** 2) / (s * math.sqrt(2 * math.pi))
               for w, m, s in zip(weights, means, stds))
