"""Distances and functionals: Wasserstein-p, KL, kernel Stein discrepancy, moment norms."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _pairwise
from .errors import InvalidParameterError
from .kernels import Kernel
from .meanfield.grid import GridDensity
from .potentials import Potential, TargetDensity


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point masses; uniform weights when ``weights`` is omitted."""

    points: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        pts = _pairwise.as_points(self.points)
        object.__setattr__(self, "points", pts)
        if self.weights is None:
            object.__setattr__(self, "weights", np.full(len(pts), 1.0 / len(pts)))
            object.__setattr__(self, "uniform", True)
            return
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(pts),) or np.any(w < 0):
            raise InvalidParameterError("weights must be nonnegative with one weight per point")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidParameterError(f"weights sum to {w.sum():.15f}, expected 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "uniform", bool(np.all(w == w[0])))

    @classmethod
    def from_unnormalized(cls, points, weights) -> "EmpiricalMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(points, w / w.sum())

    @classmethod
    def from_grid(cls, rho: GridDensity) -> "EmpiricalMeasure":
        """Cell-centre quadrature of a grid density."""
        return cls.from_unnormalized(rho.centers, np.clip(rho.values, 0.0, None) * rho.h)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


def _as_measure(m):
    if isinstance(m, (EmpiricalMeasure, GridDensity)):
        return m
    if hasattr(m, "positions"):
        return EmpiricalMeasure(m.positions)
    return EmpiricalMeasure(m)


def _quantile_pieces(m):
    """Quantile function as pieces linear in u: knots u_0..u_K and end values per piece."""
    if isinstance(m, GridDensity):
        return m.cdf_edges(), m.edges[:-1], m.edges[1:]
    order = np.argsort(m.points[:, 0], kind="stable")
    x = m.points[order, 0]
    c = np.concatenate([[0.0], np.cumsum(m.weights[order])])
    c /= c[-1]
    return c, x, x


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _eval_pieces(knots, left, right, u, piece_u):
    j = np.clip(np.searchsorted(knots, piece_u, side="right") - 1, 0, len(left) - 1)
    width = knots[j + 1] - knots[j]
    frac = np.where(width > 0, (u - knots[j]) / np.where(width > 0, width, 1.0), 0.0)
    return left[j] + (right[j] - left[j]) * frac


def _abs_power_integral(a, b, g0, g1, p):
    """sum over segments of int_a^b |g|^p for g linear from g0 to g1, g of one sign."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    t = _GL_NODES[None, :]
    g = 0.5 * (g0 + g1)[:, None] + 0.5 * (g1 - g0)[:, None] * t
    return float(np.sum(half * np.sum(_GL_WEIGHTS[None, :] * np.abs(g) ** p, axis=1))) if len(mid) else 0.0


def _quantile_wasserstein(a, b, p):
    ka, la, ra = _quantile_pieces(a)
    kb, lb, rb = _quantile_pieces(b)
    knots = np.union1d(ka, kb)
    lo, hi = knots[:-1], knots[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    mid = 0.5 * (lo + hi)
    # the quantile difference is linear on each merged interval
    d0 = _eval_pieces(ka, la, ra, lo, mid) - _eval_pieces(kb, lb, rb, lo, mid)
    d1 = _eval_pieces(ka, la, ra, hi, mid) - _eval_pieces(kb, lb, rb, hi, mid)
    cross = (d0 * d1) < 0
    root = np.where(cross, lo + (hi - lo) * d0 / np.where(cross, d0 - d1, 1.0), hi)
    total = _abs_power_integral(lo, root, d0, np.where(cross, 0.0, d1), p)
    total += _abs_power_integral(root[cross], hi[cross], np.zeros(cross.sum()), d1[cross], p)
    return total ** (1.0 / p)


def _exact_power_sum(x, y, p) -> float:
    """sum_i |x_i - y_i|^p correctly rounded when p is an integer.

    For p = 1 the signed endpoints are summed with fsum, which is exact; other
    integer p use rational arithmetic. Non-integer p sums rounded terms. Exact
    sums make the sorted matching and the exhaustive search agree bit for bit
    when several assignments share the optimal cost.
    """
    if p == 1:
        sign = np.where(x >= y, 1.0, -1.0)
        return math.fsum(np.concatenate([sign * x, -sign * y]))
    if float(p).is_integer():
        # scale every value to an integer over a common power-of-two denominator
        q = int(p)
        ratios = [v.as_integer_ratio() for v in x.tolist() + y.tolist()]
        den = max(d for _, d in ratios)
        ints = [n * (den // d) for n, d in ratios]
        m = len(x)
        total = sum(abs(u - v) ** q for u, v in zip(ints[:m], ints[m:]))
        try:
            return total / den**q
        except OverflowError:
            return math.inf
    return math.fsum(np.abs(x - y) ** p)


def _root(total, n, p):
    mean = total / n
    return mean if p == 1 else mean ** (1.0 / p)


def wasserstein_1d(a, b, p: float = 1.0) -> float:
    """W_p between one-dimensional measures from their quantile functions.

    Equal-size uniform empirical measures are matched in sorted order. All other
    combinations (weighted atoms, grid densities) integrate |F_a^-1 - F_b^-1|^p
    exactly piece by piece: both quantile functions are piecewise linear in u.
    """
    if p < 1:
        raise InvalidParameterError(f"Wasserstein order must be >= 1, got {p}")
    a, b = _as_measure(a), _as_measure(b)
    for m in (a, b):
        if isinstance(m, EmpiricalMeasure) and m.dimension != 1:
            raise InvalidParameterError("wasserstein_1d needs 1-D measures; use wasserstein_exact_small for d > 1")
    if (
        isinstance(a, EmpiricalMeasure)
        and isinstance(b, EmpiricalMeasure)
        and a.uniform
        and b.uniform
        and len(a.points) == len(b.points)
    ):
        xs = np.sort(a.points[:, 0])
        ys = np.sort(b.points[:, 0])
        return _root(_exact_power_sum(xs, ys, p), len(xs), p)
    return _quantile_wasserstein(a, b, p)


def wasserstein_exact_small(a, b, p: float = 1.0) -> float:
    """Brute-force W_p over all N! assignments; uniform weights, N <= 8, any d."""
    a, b = _as_measure(a), _as_measure(b)
    if not (isinstance(a, EmpiricalMeasure) and isinstance(b, EmpiricalMeasure)):
        raise InvalidParameterError("exhaustive assignment needs empirical measures")
    n = len(a.points)
    if n != len(b.points) or n > 8 or not (a.uniform and b.uniform):
        raise InvalidParameterError("exhaustive assignment needs equal sizes N <= 8 and uniform weights")
    if a.dimension != b.dimension:
        raise InvalidParameterError("measures live in different dimensions")
    if a.dimension == 1 and float(p).is_integer():
        # exact rational costs, so ties between optimal assignments cannot be broken by rounding
        xa, xb = [Fraction(v) for v in a.points[:, 0].tolist()], [Fraction(v) for v in b.points[:, 0].tolist()]
        cost = [[abs(u - v) ** int(p) for v in xb] for u in xa]
        best = min(sum(cost[i][s] for i, s in enumerate(perm)) for perm in itertools.permutations(range(n)))
        return _root(float(best), n, p)
    cost = np.linalg.norm(a.points[:, None, :] - b.points[None, :, :], axis=-1) ** p
    best = min(math.fsum(cost[i, s] for i, s in enumerate(perm)) for perm in itertools.permutations(range(n)))
    return _root(best, n, p)


def _log_target_on(rho: GridDensity, target: TargetDensity):
    if target.values is None or len(target.values) != rho.cells:
        raise InvalidParameterError("target has no grid representation matching the density")
    lo, hi = target.domain
    if abs(lo + rho.half_width) > 1e-12 * rho.half_width or abs(hi - rho.half_width) > 1e-12 * rho.half_width:
        raise InvalidParameterError("target grid and density grid differ")
    return target.log_values


def kl_grid(rho: GridDensity, target: TargetDensity) -> float:
    """sum_j h rho_j log(rho_j / rho_inf_j) with 0 log 0 = 0."""
    log_t = _log_target_on(rho, target)
    r = rho.values
    pos = r > 0
    return float(rho.h * np.sum(r[pos] * (np.log(r[pos]) - log_t[pos])))


def ksd(mu, k: Kernel, V: Potential) -> float:
    """Squared kernel Stein discrepancy sum_ij w_i w_j u(x_i, x_j).

    u(x, y) = grad V(x).grad V(y) K(x-y) + (grad V(x) - grad V(y)).grad K(x-y) - lap K(x-y),
    the double integral of (grad rho + grad V rho) K (grad rho + grad V rho)
    after moving both derivatives onto K.
    """
    mu = _as_measure(mu)
    if isinstance(mu, GridDensity):
        mu = EmpiricalMeasure.from_grid(mu)
    if mu.dimension != k.dimension or mu.dimension != V.dimension:
        raise InvalidParameterError("kernel, potential and measure dimensions differ")
    gv = np.ascontiguousarray(V.gradient(mu.points))
    rows = _pairwise.stein_kernel_rows(mu.points, mu.weights, gv, k.variance, k.norm)
    return _pairwise.fixed_sum(rows)


def moment_norm(mu, V: Potential | None = None, mode: str = "P_V", p: float | None = None) -> float:
    """||mu||_{P_V} = int (1 + V) dmu  or  ||mu||_{P_p} = int |x|^p dmu."""
    mu = _as_measure(mu)
    if isinstance(mu, GridDensity):
        mu = EmpiricalMeasure.from_grid(mu)
    if mode == "P_V":
        if V is None:
            raise InvalidParameterError("P_V norm needs a potential")
        return float(np.dot(mu.weights, 1.0 + V.value(mu.points)))
    if mode == "P_p":
        if p is None or p < 1:
            raise InvalidParameterError("P_p norm needs p >= 1")
        return float(np.dot(mu.weights, np.linalg.norm(mu.points, axis=1) ** p))
    raise InvalidParameterError(f"unknown norm mode {mode!r}")
