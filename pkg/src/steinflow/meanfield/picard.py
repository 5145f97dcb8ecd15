"""Picard iteration for the integral form of the characteristic flow.

On a time mesh over [0, T0] the map

    F(u)(t, x_k) = x_k + int_0^t U[mu_s](u(s, x_k)) ds,   mu_s = sum_j w_j delta_{u(s, x_j)},

is iterated from u(t, x) = x until successive iterates are within ``tol`` in
the sup norm over mesh times and points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_simpson

from .. import _pairwise
from ..errors import HorizonTooLongError, InvalidParameterError
from ..kernels import Kernel
from ..potentials import Potential
from .characteristics import WeightedEnsemble


@dataclass
class PicardReport:
    times: np.ndarray
    flow: np.ndarray  # (n_times, M, d)
    distances: list
    ratios: list
    converged: bool
    horizon_estimate: float
    log_jacobians: np.ndarray | None = None  # (n_times, M) along the converged iterate

    @property
    def iterations(self) -> int:
        return len(self.distances)

    @property
    def contraction_factor(self) -> float:
        """Largest observed ratio of successive sup-distances."""
        return max(self.ratios) if self.ratios else float("nan")

    def ensemble(self, nu: WeightedEnsemble, index: int = -1) -> WeightedEnsemble:
        """The ensemble carried to mesh time ``times[index]`` by the converged flow map."""
        return replace(nu, points=self.flow[index], log_jacobians=self.log_jacobians[index], time=float(self.times[index]))


def contraction_horizon(nu: WeightedEnsemble, k: Kernel, V: Potential, radius: float | None = None, samples: int = 2001) -> float:
    """Horizon below which F is expected to contract, from the fixed-point constants.

    1 / (2 ||D^2 K||_inf + 2 C_r (||K||_inf + ||grad K||_inf) ||nu||_{P_V}),
    with C_r = sup_{|x| <= r} (|grad V| + |D^2 V|) / (1 + V) estimated on a
    grid (1-D) or random sample and r = max_k |x_k| + 1 by default. This is a
    heuristic guide: the observed ratios decide convergence.
    """
    x = nu.points
    r = float(np.max(np.linalg.norm(x, axis=1))) + 1.0 if radius is None else radius
    d = x.shape[1]
    if d == 1:
        probe = np.linspace(-r, r, samples)[:, None]
    else:
        rng = np.random.default_rng(0)
        probe = rng.uniform(-r, r, (samples, d))
        probe = probe[np.linalg.norm(probe, axis=1) <= r]
    g = np.linalg.norm(V.gradient(probe), axis=-1)
    hs = np.linalg.norm(V.hessian(probe), ord=2, axis=(-2, -1))
    c_r = float(np.max((g + hs) / (1.0 + V.value(probe))))
    pv = float(np.dot(nu.weights, 1.0 + V.value(x)))
    return 1.0 / (2.0 * k.hess_sup + 2.0 * c_r * (k.sup + k.grad_sup) * pv)


def _drift_on_mesh(u, w, k, V):
    out = np.empty_like(u)
    for n in range(u.shape[0]):
        x = np.ascontiguousarray(u[n])
        gv = np.ascontiguousarray(V.gradient(x))
        out[n] = _pairwise.stein_drift(x, x, w, gv, k.variance, k.norm)
    return out


def _log_jacobians(u, w, k, V, times):
    div = np.empty(u.shape[:2])
    for n in range(u.shape[0]):
        x = np.ascontiguousarray(u[n])
        gv = np.ascontiguousarray(V.gradient(x))
        div[n] = _pairwise.stein_divergence(x, x, w, gv, k.variance, k.norm)
    return cumulative_simpson(div, dx=times[1] - times[0], axis=0, initial=0.0)


def picard_map(u, x0, w, k, V, times):
    """One application of F on the mesh ``times``; ``u`` has shape (n_times, M, d)."""
    drift = _drift_on_mesh(u, w, k, V)
    dt = times[1] - times[0]
    return x0[None] + cumulative_simpson(drift, dx=dt, axis=0, initial=0.0)


def picard_flow_map(
    nu: WeightedEnsemble,
    k: Kernel,
    V: Potential,
    T0: float,
    tol: float = 1e-9,
    max_iters: int = 60,
    mesh: int = 200,
) -> PicardReport:
    """Iterate u <- F(u) on [0, T0] with ``mesh`` uniform intervals.

    Raises :class:`HorizonTooLongError` when the distance ratio is >= 1 for
    three consecutive iterations. Returns the converged flow map on the mesh
    plus the per-iteration sup-distances and their ratios.
    """
    if not T0 > 0 or not tol > 0:
        raise InvalidParameterError("need T0 > 0 and tol > 0")
    if mesh < 2 or mesh % 2:
        raise InvalidParameterError("the time mesh needs an even number of intervals")
    times = np.linspace(0.0, T0, mesh + 1)
    x0 = nu.points
    u = np.broadcast_to(x0, (mesh + 1,) + x0.shape).copy()
    distances, ratios = [], []
    streak = 0
    converged = False
    for _ in range(max_iters):
        new = picard_map(u, x0, nu.weights, k, V, times)
        dist = float(np.max(np.abs(new - u)))
        if distances:
            ratio = dist / distances[-1] if distances[-1] > 0 else 0.0
            ratios.append(ratio)
            streak = streak + 1 if ratio >= 1.0 else 0
        distances.append(dist)
        u = new
        if streak >= 3:
            raise HorizonTooLongError(
                f"Picard distances grew for 3 iterations on [0, {T0}]; try T0 <= {0.5 * T0:.3g}"
            )
        if not math.isfinite(dist):
            raise HorizonTooLongError(f"Picard iterates diverged on [0, {T0}]")
        if dist < tol:
            converged = True
            break
    log_j = nu.log_jacobians[None] + _log_jacobians(u, nu.weights, k, V, times)
    return PicardReport(times, u, distances, ratios, converged, contraction_horizon(nu, k, V), log_j)
