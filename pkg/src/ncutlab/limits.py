"""Cap/ball integrals of the weight functions and the limit functionals of cut, volume, Ncut, Cheeger cut.

Limits are only evaluated for axis-aligned cut planes: the cut limit is an
integral of a power of the density over a slice, the volume limits are
integrals of a power of the density over half-spaces.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import quadrature
from .graph import KNN_KINDS, GraphSpec, WeightFunction
from .quality import Hyperplane, ZeroVolume


class InfiniteRadiusUnitWeight(ValueError):
    pass


class UnsupportedDimension(ValueError):
    pass


class AllDegenerate(ValueError):
    pass


def eta(d: int) -> float:
    """Volume of the d-dimensional unit ball (eta(0) = 1)."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def _gauss_moment(k: int, q: int, upper: float) -> float:
    """int_0^upper v**k exp(-q v**2 / 2) dv."""
    val, _ = integrate.quad(lambda v: v**k * math.exp(-0.5 * q * v * v), 0.0, upper, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def cap_integral(weight: WeightFunction, r: float, d: int, q: int = 1) -> float:
    """eta_{d-1} * int_0^r u**d f(u)**q du."""
    if q not in (1, 2):
        raise ValueError("q must be 1 or 2")
    if not r > 0:
        raise ValueError("r must be positive")
    if weight.kind == "unit":
        if math.isinf(r):
            raise InfiniteRadiusUnitWeight("the cap integral of the unit weight diverges at r = inf")
        return eta(d - 1) * r ** (d + 1) / (d + 1)
    s = weight.sigma
    scale = eta(d - 1) * s ** (d + 1 - q * d) * (2.0 * math.pi) ** (-q * d / 2.0)
    return scale * _gauss_moment(d, q, r / s)


def ball_integral(weight: WeightFunction, r: float, d: int, q: int = 1) -> float:
    """d * eta_d * int_0^r u**(d-1) f(u)**q du."""
    if q not in (1, 2):
        raise ValueError("q must be 1 or 2")
    if not r > 0:
        raise ValueError("r must be positive")
    if weight.kind == "unit":
        if math.isinf(r):
            raise InfiniteRadiusUnitWeight("the ball integral of the unit weight diverges at r = inf")
        return eta(d) * r**d
    s = weight.sigma
    scale = d * eta(d) * s ** (d - q * d) * (2.0 * math.pi) ** (-q * d / 2.0)
    return scale * _gauss_moment(d - 1, q, r / s)


def _uniform_ball(rng, m: int, d: int, radius: float) -> np.ndarray:
    if d == 1:
        return radius * (2.0 * rng.random((m, 1)) - 1.0)
    direction = rng.standard_normal((m, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * (radius * rng.random(m) ** (1.0 / d))[:, None]


def _mc(estimand, trials: int, seed: int, chunk: int = 1_000_000):
    rng = np.random.default_rng(seed)
    total = total_sq = 0.0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        vals = estimand(rng, m)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += m
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    return mean, math.sqrt(var / max(trials - 1, 1))


def mc_cap_oracle(weight: Callable, R: float, d: int, trials: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate (and standard error) of the cap double integral.

    Estimates int_0^R int_{B(t e_1, R) and y_1 <= 0} f(|y - t e_1|) dy dt with t
    uniform on [0, R] and the offset y - t e_1 uniform in the ball of radius R.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    measure = R * eta(d) * R**d

    def estimand(rng, m):
        t = R * rng.random(m)
        z = _uniform_ball(rng, m, d, R)
        inside = t + z[:, 0] <= 0.0
        return measure * np.where(inside, weight(np.linalg.norm(z, axis=1)), 0.0)

    return _mc(estimand, trials, seed)


def mc_ball_oracle(weight: Callable, R: float, d: int, trials: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate of int_{B(0, R)} f(|y|) dy."""
    if not R > 0:
        raise ValueError("R must be positive")
    measure = eta(d) * R**d

    def estimand(rng, m):
        z = _uniform_ball(rng, m, d, R)
        return measure * np.asarray(weight(np.linalg.norm(z, axis=1)), dtype=float)

    return _mc(estimand, trials, seed)


@dataclass(frozen=True)
class FamilyRow:
    """Limit expressions for one graph family: constant * integral of p**power."""

    cut_const: Callable[[int], float]
    cut_power: Callable[[int], float]
    vol_const: Callable[[int], float]
    vol_power: Callable[[int], float]


def _gauss_norm(d):
    return (2.0 * math.pi) ** (d / 2.0)


_SQRT_2PI = math.sqrt(2.0 * math.pi)

# one row per line of the scaling/limit table: kNN, r-graph, complete graph
FAMILY_TABLE: dict[str, FamilyRow] = {
    "knn_unweighted": FamilyRow(
        lambda d: 2 * eta(d - 1) / ((d + 1) * eta(d) ** (1 + 1 / d)), lambda d: 1 - 1 / d,
        lambda d: 1.0, lambda d: 1.0),
    "knn_gauss_r_dom": FamilyRow(
        lambda d: 2 / _SQRT_2PI, lambda d: 2.0,
        lambda d: 1.0, lambda d: 2.0),
    "knn_gauss_sigma_dom": FamilyRow(
        lambda d: 2 * eta(d - 1) * eta(d) ** (-1 - 1 / d) / ((d + 1) * _gauss_norm(d)), lambda d: 1 - 1 / d,
        lambda d: 1 / _gauss_norm(d), lambda d: 1.0),
    "r_unweighted": FamilyRow(
        lambda d: 2 * eta(d - 1) / (d + 1), lambda d: 2.0,
        lambda d: eta(d), lambda d: 2.0),
    "r_gauss_r_dom": FamilyRow(
        lambda d: 2 / _SQRT_2PI, lambda d: 2.0,
        lambda d: 1.0, lambda d: 2.0),
    "r_gauss_sigma_dom": FamilyRow(
        lambda d: 2 * eta(d - 1) / ((d + 1) * _gauss_norm(d)), lambda d: 2.0,
        lambda d: eta(d) / _gauss_norm(d), lambda d: 2.0),
    "complete_gauss": FamilyRow(
        lambda d: 2 / _SQRT_2PI, lambda d: 2.0,
        lambda d: 1.0, lambda d: 2.0),
}
FAMILIES = tuple(FAMILY_TABLE)
ALIASES = {"knn": "knn_unweighted", "r": "r_unweighted", "complete": "complete_gauss"}


def resolve_family(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in FAMILY_TABLE:
        raise KeyError(f"unknown graph family {name!r}")
    return name


def family_for_spec(spec: GraphSpec) -> str:
    if spec.kind == "complete":
        return "complete_gauss"
    prefix = "knn" if spec.kind in KNN_KINDS else "r"
    if spec.weight.kind == "unit":
        return f"{prefix}_unweighted"
    if spec.regime is None:
        from .quality import RegimeUnspecified

        raise RegimeUnspecified("gaussian kNN/r-graphs need a declared regime")
    return f"{prefix}_gauss_{'r_dom' if spec.regime == 'r_dominates_sigma' else 'sigma_dom'}"


@dataclass(frozen=True)
class LimitReport:
    cut_lim: float
    vol_lim_plus: float
    vol_lim_minus: float
    ncut_lim: float
    cheeger_lim: float
    family: str
    quadrature_error: float

    def to_dict(self) -> dict:
        return asdict(self)


def _axis_of(density, hyperplane: Hyperplane) -> int:
    if density.dim - 1 > 2:
        raise UnsupportedDimension(f"surface integrals are limited to d <= 3, got d={density.dim}")
    if hyperplane.dim != density.dim:
        raise ValueError("hyperplane and density dimensions differ")
    axis = hyperplane.axis
    if axis is None:
        raise ValueError("limit functionals need an axis-aligned hyperplane with normal +e_k")
    return axis


def _cut_limit(density, hyperplane, family):
    axis = _axis_of(density, hyperplane)
    row = FAMILY_TABLE[resolve_family(family)]
    d = density.dim
    val, err = quadrature.slice_integral(density, axis, hyperplane.offset, (row.cut_power(d),))
    c = row.cut_const(d)
    return c * float(val[0]), c * err


def _vol_limit(density, hyperplane, side, family):
    axis = _axis_of(density, hyperplane)
    row = FAMILY_TABLE[resolve_family(family)]
    d = density.dim
    lo, hi = density.bounding_box[axis]
    b = hyperplane.offset
    a, c_ = (b, hi) if side else (lo, b)
    val, err = quadrature.axis_integral(density, axis, a, c_, (row.vol_power(d),))
    k = row.vol_const(d)
    return k * float(val[0]), k * err


def cut_limit(density, hyperplane: Hyperplane, family: str) -> float:
    """Limit of the scaled cut: constant times the slice integral of p**power."""
    return _cut_limit(density, hyperplane, family)[0]


def vol_limit(density, hyperplane: Hyperplane, side: bool, family: str) -> float:
    """Limit of the scaled volume of H+ (side=True) or H- (side=False)."""
    return _vol_limit(density, hyperplane, side, family)[0]


def _assemble(cut_lim, vp, vm, family, err) -> LimitReport:
    if vp <= 0.0 or vm <= 0.0:
        raise ZeroVolume(f"limit volume vanishes on a side (vol+={vp}, vol-={vm})")
    return LimitReport(cut_lim, vp, vm, cut_lim * (1.0 / vp + 1.0 / vm), cut_lim / min(vp, vm), family, err)


def ncut_limit(density, hyperplane: Hyperplane, family: str) -> LimitReport:
    family = resolve_family(family)
    c, ec = _cut_limit(density, hyperplane, family)
    vp, ep = _vol_limit(density, hyperplane, True, family)
    vm, em = _vol_limit(density, hyperplane, False, family)
    return _assemble(c, vp, vm, family, ec + ep + em)


@dataclass(frozen=True)
class SweepResult:
    family: str
    axis: int
    offsets: np.ndarray
    ncut_lim: np.ndarray
    cheeger_lim: np.ndarray
    best_offset: float
    quadrature_error: float

    def csv_rows(self):
        for b, nc, ch in zip(self.offsets, self.ncut_lim, self.cheeger_lim):
            yield f"{b:.17g},{nc:.17g},{ch:.17g}"


def sweep_families(density, families, axis: int, offsets) -> dict[str, SweepResult]:
    """Ncut/Cheeger limits along a family of parallel planes, for several families at once."""
    offsets = np.asarray(offsets, dtype=float)
    if offsets.ndim != 1 or offsets.size == 0:
        raise ValueError("offsets must be a nonempty 1-D sequence")
    if np.any(np.diff(offsets) <= 0):
        raise ValueError("offsets must be strictly increasing")
    if density.dim - 1 > 2:
        raise UnsupportedDimension(f"surface integrals are limited to d <= 3, got d={density.dim}")
    d = density.dim
    names = [resolve_family(f) for f in families]
    rows = [FAMILY_TABLE[f] for f in names]
    vol_powers = sorted({r.vol_power(d) for r in rows})
    cut_powers = sorted({r.cut_power(d) for r in rows})

    below, total, vol_err = quadrature.cumulative_axis_integrals(density, axis, offsets, vol_powers)
    cut_vals = np.empty((offsets.size, len(cut_powers)))
    cut_err = 0.0
    for k, b in enumerate(offsets):
        cut_vals[k], e = quadrature.slice_integral(density, axis, b, cut_powers)
        cut_err += e

    out = {}
    for name, alias, row in zip(names, families, rows):
        vi = vol_powers.index(row.vol_power(d))
        ci = cut_powers.index(row.cut_power(d))
        cl = row.cut_const(d) * cut_vals[:, ci]
        vm = row.vol_const(d) * below[:, vi]
        vp = row.vol_const(d) * (total[vi] - below[:, vi])
        ok = (vp > 0) & (vm > 0)
        if not ok.any():
            raise AllDegenerate("every offset leaves one side with zero limit volume")
        with np.errstate(divide="ignore", invalid="ignore"):
            nc = np.where(ok, cl * (1.0 / vp + 1.0 / vm), np.inf)
            ch = np.where(ok, cl / np.minimum(vp, vm), np.inf)
        best = int(np.argmin(nc))
        out[alias] = SweepResult(name, axis, offsets, nc, ch, float(offsets[best]), vol_err + cut_err)
    return out


def optimal_cut_sweep(density, family: str, axis: int, offsets) -> SweepResult:
    """Evaluate the Ncut limit at every offset and return the minimizer (first one on ties)."""
    return sweep_families(density, [family], axis, offsets)[family]
