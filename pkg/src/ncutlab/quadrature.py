"""Adaptive quadrature of density powers over slices and slabs.

Everything is phrased in terms of an axis-aligned coordinate ``t``:

* ``slice_integral`` integrates ``p**gamma`` over the hyperplane ``{x[axis] = t}``
  (for d = 1 this is just ``p(t)**gamma``),
* ``axis_integral`` integrates the slice integral over ``t`` in ``[a, b]``,
  i.e. ``p**gamma`` over a slab.

Several powers are integrated at once, sharing density evaluations.  Powers are
taken on the support only, so ``gamma = 0`` gives the support indicator.
"""
from __future__ import annotations

import numpy as np

DEFAULT_EPSABS = 1e-12
DEFAULT_EPSREL = 1e-10


_GL_ORDER = 20
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


def _powers(p: np.ndarray, powers: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape + powers.shape)
    pos = p > 0
    out[pos] = p[pos][:, None] ** powers
    return out


def _gl(f, a, b):
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    return 0.5 * (b - a) * (_GL_WEIGHTS @ f(x))


def adaptive_gauss(f, a: float, b: float, epsabs=DEFAULT_EPSABS, epsrel=DEFAULT_EPSREL, max_intervals=4000):
    """Globally adaptive Gauss-Legendre for a vectorized, vector-valued ``f``.

    ``f`` maps an array of m abscissae to an (m, k) array.  Each interval is
    compared against the sum over its two halves; the worst interval is split
    until the summed error estimate meets the tolerance.  Returns (values, error).
    """
    whole = _gl(f, a, b)
    items = []  # (error, a, b, halves_sum, left, right)

    def split(lo, hi, est):
        mid = 0.5 * (lo + hi)
        left, right = _gl(f, lo, mid), _gl(f, mid, hi)
        better = left + right
        return [float(np.max(np.abs(better - est))), lo, hi, better, left, right]

    items.append(split(a, b, whole))
    while True:
        total = sum(it[3] for it in items)
        err = sum(it[0] for it in items)
        if err <= max(epsabs, epsrel * float(np.max(np.abs(total)))) or len(items) >= max_intervals:
            return total, err
        worst = max(range(len(items)), key=lambda i: items[i][0])
        _, lo, hi, _, left, right = items.pop(worst)
        mid = 0.5 * (lo + hi)
        items.append(split(lo, mid, left))
        items.append(split(mid, hi, right))


def _line_integral(density, point, axis, powers, epsabs, epsrel):
    total = np.zeros(powers.shape)
    err = 0.0

    def f(t):
        q = np.repeat(point[None, :], t.size, axis=0)
        q[:, axis] = t
        return _powers(density.pdf(q), powers)

    for a, b in density.support_on_line(point, axis):
        if not b > a:
            continue
        val, e = adaptive_gauss(f, a, b, epsabs, epsrel)
        total += val
        err += e
    return total, err


def _integrate_free(density, point, free_axes, powers, epsabs, epsrel):
    if len(free_axes) == 1:
        return _line_integral(density, point, free_axes[0], powers, epsabs, epsrel)
    outer, rest = free_axes[0], free_axes[1:]
    lo, hi = density.bounding_box[outer]
    inner_err = [0.0]

    def g(ts):
        out = np.empty((ts.size, powers.size))
        for i, t in enumerate(ts):
            q = point.copy()
            q[outer] = t
            out[i], e = _integrate_free(density, q, rest, powers, epsabs, epsrel)
            inner_err[0] = max(inner_err[0], e)
        return out

    val, e = adaptive_gauss(g, lo, hi, epsabs, epsrel)
    return val, e + inner_err[0] * (hi - lo)


def slice_integral(density, axis: int, t: float, powers=(1.0,), epsabs=DEFAULT_EPSABS, epsrel=DEFAULT_EPSREL):
    """Integral of ``p**gamma`` over ``{x[axis] = t}`` for each gamma; returns (values, error)."""
    powers = np.atleast_1d(np.asarray(powers, dtype=float))
    d = density.dim
    point = np.zeros(d)
    point[axis] = t
    if d == 1:
        return _powers(density.pdf(point[None, :]), powers)[0], 0.0
    free = tuple(a for a in range(d) if a != axis)
    return _integrate_free(density, point, free, powers, epsabs, epsrel)


def axis_integral(density, axis: int, a: float, b: float, powers=(1.0,), epsabs=DEFAULT_EPSABS, epsrel=DEFAULT_EPSREL):
    """Integral of ``p**gamma`` over the slab ``a <= x[axis] <= b``; returns (values, error)."""
    powers = np.atleast_1d(np.asarray(powers, dtype=float))
    lo, hi = density.bounding_box[axis]
    a, b = max(a, lo), min(b, hi)
    if not b > a:
        return np.zeros(powers.shape), 0.0
    inner_err = [0.0]

    def g(ts):
        if density.dim == 1:
            return _powers(density.pdf(ts[:, None]), powers)
        out = np.empty((ts.size, powers.size))
        for i, t in enumerate(ts):
            out[i], e = slice_integral(density, axis, t, powers, epsabs, epsrel)
            inner_err[0] = max(inner_err[0], e)
        return out

    pts = [x for x in density.axis_breakpoints(axis) if a < x < b]
    edges = [a, *pts, b]
    total = np.zeros(powers.shape)
    err = 0.0
    for lo_, hi_ in zip(edges[:-1], edges[1:]):
        val, e = adaptive_gauss(g, lo_, hi_, epsabs, epsrel)
        total += val
        err += e
    return total, err + inner_err[0] * (b - a)


def box_integral(density, powers=(1.0,), epsabs=DEFAULT_EPSABS, epsrel=DEFAULT_EPSREL):
    """Integral of ``p**gamma`` over the whole support."""
    lo, hi = density.bounding_box[0]
    return axis_integral(density, 0, lo, hi, powers, epsabs, epsrel)


def cumulative_axis_integrals(density, axis: int, cuts, powers=(1.0,), epsabs=DEFAULT_EPSABS, epsrel=DEFAULT_EPSREL):
    """Slab integrals from the lower box edge up to every value in ``cuts`` (sorted).

    Returns (values of shape (len(cuts), len(powers)), total over the box, summed error).
    One pass over the axis; each gap between consecutive cuts is integrated once.
    """
    powers = np.atleast_1d(np.asarray(powers, dtype=float))
    cuts = np.asarray(cuts, dtype=float)
    lo, hi = density.bounding_box[axis]
    knots = np.clip(cuts, lo, hi)
    edges = np.concatenate([[lo], knots, [hi]])
    pieces = np.zeros((len(edges) - 1, powers.size))
    err = 0.0
    for i in range(len(edges) - 1):
        vals, e = axis_integral(density, axis, edges[i], edges[i + 1], powers, epsabs, epsrel)
        pieces[i] = vals
        err += e
    running = np.cumsum(pieces, axis=0)
    return running[:-1], running[-1], err
