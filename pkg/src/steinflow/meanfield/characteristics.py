"""Mean-field characteristic flow on a weighted point ensemble.

Positions follow dX/dt = U[mu_t](X) with mu_t = sum_k w_k delta_{X_k}, and
each point carries log J_k, the log-Jacobian of the flow map, through
d(log J_k)/dt = (div U[mu_t])(X_k). The density along the flow is then
rho_t(X_k) = rho_0(x_k) exp(-log J_k).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .. import _pairwise
from ..densities import quantile_levels
from ..errors import InvalidParameterError, NumericalBlowupError
from ..kernels import Kernel
from ..particles import BLOWUP_RADIUS, IntegratorSpec
from ..potentials import Potential
from .grid import GridDensity


@dataclass(frozen=True)
class WeightedEnsemble:
    points: np.ndarray
    weights: np.ndarray
    log_jacobians: np.ndarray
    initial_densities: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        pts = _pairwise.as_points(self.points)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(pts),) or np.any(w <= 0):
            raise InvalidParameterError("ensemble weights must be positive, one per point")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidParameterError(f"ensemble weights sum to {w.sum():.15f}, expected 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "log_jacobians", np.asarray(self.log_jacobians, dtype=float).reshape(len(pts)))
        object.__setattr__(self, "initial_densities", np.asarray(self.initial_densities, dtype=float).reshape(len(pts)))

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def positions(self) -> np.ndarray:
        return self.points

    def densities(self) -> np.ndarray:
        """rho_t at the current points: rho_0(x_k) exp(-log J_k)."""
        return self.initial_densities * np.exp(-self.log_jacobians)


def quadrature_ensemble(density, m: int) -> WeightedEnsemble:
    """Equal-mass stratification: points at F^-1((k + 1/2)/m), weights 1/m."""
    if m < 1:
        raise InvalidParameterError("ensemble needs at least one point")
    if isinstance(density, GridDensity):
        x = density.ppf(quantile_levels(m))
    else:
        x = np.asarray(density.ppf(quantile_levels(m)), dtype=float)
    return WeightedEnsemble(x[:, None], np.full(m, 1.0 / m), np.zeros(m), density.pdf(x))


def atom_ensemble(points, weights=None) -> WeightedEnsemble:
    """Ensemble of atoms with no density attached (densities reported as nan)."""
    pts = _pairwise.as_points(points)
    w = np.full(len(pts), 1.0 / len(pts)) if weights is None else weights
    return WeightedEnsemble(pts, w, np.zeros(len(pts)), np.full(len(pts), np.nan))


def _rhs(x, w, k, V):
    gv = np.ascontiguousarray(V.gradient(x))
    u = _pairwise.stein_drift(x, x, w, gv, k.variance, k.norm)
    div = _pairwise.stein_divergence(x, x, w, gv, k.variance, k.norm)
    return u, div


def _check(x, t):
    bad = ~np.isfinite(x) | (np.abs(x) > BLOWUP_RADIUS)
    if np.any(bad):
        idx = int(np.argwhere(bad)[0][0])
        raise NumericalBlowupError(f"characteristic {idx} left the finite region at t={t:.6g}", index=idx, time=t)


def characteristic_step(nu: WeightedEnsemble, k: Kernel, V: Potential, dt: float, scheme: str = "rk4") -> WeightedEnsemble:
    x, lj, w = nu.points, nu.log_jacobians, nu.weights
    if scheme == "explicit-euler":
        u, div = _rhs(x, w, k, V)
        nx, nl = x + dt * u, lj + dt * div
    elif scheme == "rk4":
        u1, d1 = _rhs(x, w, k, V)
        u2, d2 = _rhs(x + 0.5 * dt * u1, w, k, V)
        u3, d3 = _rhs(x + 0.5 * dt * u2, w, k, V)
        u4, d4 = _rhs(x + dt * u3, w, k, V)
        nx = x + (dt / 6.0) * (u1 + 2 * u2 + 2 * u3 + u4)
        nl = lj + (dt / 6.0) * (d1 + 2 * d2 + 2 * d3 + d4)
    else:
        raise InvalidParameterError(f"unknown scheme {scheme!r}")
    _check(nx, nu.time + dt)
    return replace(nu, points=nx, log_jacobians=nl, time=nu.time + dt)


@dataclass
class CharacteristicTrajectory:
    final: WeightedEnsemble
    snapshots: dict = field(default_factory=dict)
    steps: int = 0


def characteristic_solve(
    nu: WeightedEnsemble,
    k: Kernel,
    V: Potential,
    t_final: float,
    spec: IntegratorSpec | None = None,
    checkpoints: Sequence[float] = (),
    observers: Sequence[Callable] = (),
) -> CharacteristicTrajectory:
    """Advance the ensemble to ``t_final``, storing snapshots at ``checkpoints``.

    Steps of ``spec.dt`` are shortened to land on each checkpoint. Observers
    are called as ``observer(ensemble)`` after every step.
    """
    spec = spec or IntegratorSpec("rk4", 1e-2, t_final)
    if nu.points.shape[1] != k.dimension or k.dimension != V.dimension:
        raise InvalidParameterError("ensemble, kernel and potential dimensions differ")
    stops = sorted({float(c) for c in checkpoints if 0 < c < t_final} | {float(t_final)})
    traj = CharacteristicTrajectory(nu)
    if any(float(c) == 0.0 for c in checkpoints):
        traj.snapshots[0.0] = nu
    cur = nu
    for stop in stops:
        while cur.time < stop - 1e-12 * max(1.0, stop):
            dt = min(spec.dt, stop - cur.time)
            cur = characteristic_step(cur, k, V, dt, spec.scheme)
            if stop - cur.time <= 1e-12 * max(1.0, stop):
                cur = replace(cur, time=stop)
            traj.steps += 1
            for obs in observers:
                obs(cur)
        traj.snapshots[stop] = cur
    traj.final = cur
    return traj


def ensemble_cdf(nu: WeightedEnsemble):
    """Smooth CDF through the ensemble: F(X_k) = mid-cumulative weight, F'(X_k) = rho_t(X_k).

    Between points a cubic Hermite curve is used; beyond the outermost points
    the CDF continues with exponential tails matching value and slope.
    """
    if nu.points.shape[1] != 1:
        raise InvalidParameterError("CDF reconstruction is one-dimensional")
    order = np.argsort(nu.points[:, 0], kind="stable")
    x = nu.points[order, 0]
    w = nu.weights[order]
    u = np.cumsum(w) - 0.5 * w
    dens = nu.densities()[order]
    if np.any(~np.isfinite(dens)) or np.any(np.diff(x) <= 0):
        raise InvalidParameterError("reconstruction needs distinct points with finite densities")
    spline = CubicHermiteSpline(x, u, dens)
    lam_lo = dens[0] / u[0]
    lam_hi = dens[-1] / (1.0 - u[-1])

    def cdf(y):
        y = np.asarray(y, dtype=float)
        inner = np.clip(spline(np.clip(y, x[0], x[-1])), 0.0, 1.0)
        lo = u[0] * np.exp(np.minimum(lam_lo * (y - x[0]), 0.0))
        hi = 1.0 - (1.0 - u[-1]) * np.exp(-np.maximum(lam_hi * (y - x[-1]), 0.0))
        out = np.where(y < x[0], lo, np.where(y > x[-1], hi, inner))
        return np.maximum.accumulate(out) if out.ndim == 1 else out

    return cdf


def ensemble_to_grid(nu: WeightedEnsemble, half_width: float, cells: int) -> GridDensity:
    """Cell masses from the reconstructed CDF, stored as centre values mass / h."""
    edges = np.linspace(-half_width, half_width, cells + 1)
    c = ensemble_cdf(nu)(edges)
    masses = np.diff(c)
    h = 2.0 * half_width / cells
    return GridDensity(half_width, masses / (h * masses.sum()), nu.time)
