"""Conservative first-order upwind finite-volume solver for d_t rho + d_x(rho U[rho]) = 0.

Fluxes live on the M - 1 interior faces; the two boundary faces carry zero
flux, so mass changes only by floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import StepRejectedError, TruncationError
from ..kernels import Kernel
from ..potentials import Potential, TargetDensity, target_density
from .grid import BOUNDARY_TOL, GridDensity, GridOperators
from .velocity import grid_dissipation, norm_monitor

CFL_LIMIT = 0.9
DT_FLOOR = 1e-12
COLUMNS = ("t", "mass", "KL", "dissipation", "l1_v", "w11_v")


def _fluxes(values, u):
    return np.maximum(u, 0.0) * values[:-1] + np.minimum(u, 0.0) * values[1:]


def _update(values, flux, dt, h):
    full = np.zeros(len(values) + 1)
    full[1:-1] = flux
    return values - (dt / h) * np.diff(full)


def _courant(u, dt, h):
    # outflow through both faces of a cell bounds the loss of positivity
    out = np.zeros(len(u) + 1)
    out[1:] += np.maximum(u, 0.0)
    out[:-1] += np.maximum(-u, 0.0)
    return dt * float(np.max(np.abs(u), initial=0.0)) / h, dt * float(np.max(out)) / h


def fv_step(rho: GridDensity, k: Kernel, V: Potential, dt: float, operators: GridOperators | None = None) -> GridDensity:
    """One explicit upwind step of size ``dt``.

    Raises :class:`StepRejectedError` when dt max|U| / h exceeds 0.9 or a cell
    would lose more than its content, with a suggested smaller step.
    """
    ops = operators if operators is not None else GridOperators.for_grid(rho, k, V)
    u = ops.velocity(rho.values, at="faces")
    return _step_with(rho, u, dt)


def _step_with(rho, u, dt):
    courant, outflow = _courant(u, dt, rho.h)
    if courant > CFL_LIMIT or outflow > 1.0:
        umax = float(np.max(np.abs(u)))
        raise StepRejectedError(
            f"CFL number {courant:.3f} (outflow {outflow:.3f}) too large at dt={dt:.3e}",
            suggested_dt=0.45 * rho.h / umax,
        )
    vals = _update(rho.values, _fluxes(rho.values, u), dt, rho.h)
    return rho.with_values(vals, rho.time + dt)


@dataclass
class FVTrajectory:
    """Diagnostic rows (see ``COLUMNS``), checkpoint snapshots and step statistics."""

    final: GridDensity
    rows: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    steps: int = 0
    max_kl_increase: float = -np.inf
    kl_steps: list = field(default_factory=list)

    def column(self, name) -> np.ndarray:
        i = COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")


def _kl(values, h, log_target):
    pos = values > 0
    return float(h * np.sum(values[pos] * (np.log(values[pos]) - log_target[pos])))


def fv_solve(
    rho0: GridDensity,
    k: Kernel,
    V: Potential,
    t_final: float,
    observers: Sequence[Callable] = (),
    checkpoints: Sequence[float] = (),
    cfl: float = 0.45,
    dt_max: float = 0.05,
    cadence: int = 1,
    target: TargetDensity | None = None,
    method: str = "auto",
    record_kl_steps: bool = False,
) -> FVTrajectory:
    """Integrate to ``t_final`` with dt = min(dt_max, cfl h / max|U|).

    Steps are shortened to land exactly on every checkpoint and on ``t_final``.
    Every ``cadence`` steps (and at t = 0, at checkpoints, at the end) a row
    (t, mass, KL, dissipation, l1_v, w11_v) is recorded and each observer is
    called as ``observer(t, rho, kl, dissipation)``. KL is evaluated after
    every step to track its largest single-step increase.
    """
    rho0.validate()
    ops = GridOperators.for_grid(rho0, k, V, method)
    if target is None:
        target = target_density(V, (-rho0.half_width, rho0.half_width), rho0.cells, tail_tol=np.inf)
    log_t = target.log_values
    stops = sorted({float(c) for c in checkpoints if 0 < c < t_final} | {float(t_final)})
    traj = FVTrajectory(final=rho0)

    def record(r, kl):
        diss = grid_dissipation(r, ops)
        l1, w11 = norm_monitor(r, V)
        traj.rows.append((r.time, r.mass, kl, diss, l1, w11))
        for obs in observers:
            obs(r.time, r, kl, diss)

    rho = rho0
    kl = _kl(rho.values, rho.h, log_t)
    record(rho, kl)
    if 0.0 in {float(c) for c in checkpoints}:
        traj.snapshots[0.0] = rho
    for stop in stops:
        while rho.time < stop - 1e-12 * max(1.0, stop):
            u = ops.velocity(rho.values, at="faces")
            umax = float(np.max(np.abs(u)))
            dt = dt_max if umax == 0 else min(dt_max, cfl * rho.h / umax)
            last = rho.time + dt >= stop - 1e-12 * max(1.0, stop)
            if last:
                dt = stop - rho.time
            if dt < DT_FLOOR:
                raise StepRejectedError(f"time step underflow ({dt:.3e}) at t={rho.time:.6g}", suggested_dt=dt)
            rho = _step_with(rho, u, dt)
            if last:
                rho.time = stop
            traj.steps += 1
            new_kl = _kl(rho.values, rho.h, log_t)
            traj.max_kl_increase = max(traj.max_kl_increase, new_kl - kl)
            if record_kl_steps:
                traj.kl_steps.append((rho.time, dt, new_kl))
            kl = new_kl
            if rho.boundary_mass > BOUNDARY_TOL:
                traj.final = rho
                raise TruncationError(
                    f"boundary mass {rho.boundary_mass:.3e} at t={rho.time:.6g}; enlarge the domain"
                )
            if last or traj.steps % cadence == 0:
                record(rho, kl)
        if stop != t_final:
            traj.snapshots[stop] = rho
    traj.snapshots[float(t_final)] = rho
    traj.final = rho
    return traj
