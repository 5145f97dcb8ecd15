"""N-particle dynamics: SVGD, the McKean-Vlasov comparison system and ULA.

The SVGD velocity of particle i is

    v_i = -(1/N) sum_j grad K(x_i - x_j) - (1/N) sum_j K(x_i - x_j) grad V(x_j),

which is also the kernelised Stein-optimal direction at the empirical measure.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _pairwise
from .errors import InvalidParameterError, NumericalBlowupError
from .kernels import Kernel
from .potentials import Potential

log = logging.getLogger(__name__)

BLOWUP_RADIUS = 1e8
SCHEMES = ("explicit-euler", "rk4")
DYNAMICS = ("svgd", "mckean-vlasov", "ula")


@dataclass(frozen=True)
class ParticleState:
    positions: np.ndarray
    time: float = 0.0
    step_count: int = 0

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1:
            raise InvalidParameterError(f"positions must be an (N, d) array with N >= 1, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidParameterError("positions must be finite")
        object.__setattr__(self, "positions", np.ascontiguousarray(x))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class IntegratorSpec:
    scheme: str = "explicit-euler"
    dt: float = 1e-2
    t_final: float = 1.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"unknown scheme {self.scheme!r}; known: {SCHEMES}")
        if not self.dt > 0:
            raise InvalidParameterError(f"dt must be positive, got {self.dt}")
        if not self.t_final >= self.dt:
            raise InvalidParameterError(f"need dt <= t_final, got dt={self.dt}, t_final={self.t_final}")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_final / self.dt - 1e-9))


def _positions(state) -> np.ndarray:
    if isinstance(state, ParticleState):
        return state.positions
    return _pairwise.as_points(state)


def _check_dims(x, k: Kernel | None, V: Potential | None):
    d = x.shape[1]
    if k is not None and k.dimension != d:
        raise InvalidParameterError(f"kernel dimension {k.dimension} does not match particles ({d})")
    if V is not None and V.dimension != d:
        raise InvalidParameterError(f"potential dimension {V.dimension} does not match particles ({d})")


def _weights(n, weights):
    if weights is None:
        return np.full(n, 1.0 / n)
    return np.ascontiguousarray(weights, dtype=float)


def svgd_velocity(state, k: Kernel, V: Potential, weights=None) -> np.ndarray:
    x = _positions(state)
    _check_dims(x, k, V)
    gv = np.ascontiguousarray(V.gradient(x))
    return _pairwise.stein_drift(x, x, _weights(len(x), weights), gv, k.variance, k.norm)


def mckean_vlasov_velocity(state, k: Kernel, V: Potential, weights=None) -> np.ndarray:
    """Local external force: v_i = -(1/N) sum_j grad K(x_i - x_j) - grad V(x_i)."""
    x = _positions(state)
    _check_dims(x, k, V)
    rep = _pairwise.repulsion(x, x, _weights(len(x), weights), k.variance, k.norm)
    return rep - V.gradient(x)


def ula_step(state: ParticleState, V: Potential, dt: float, rng: np.random.Generator) -> ParticleState:
    """Euler-Maruyama step of overdamped Langevin: x - grad V(x) dt + sqrt(2 dt) xi."""
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    x = state.positions
    noise = rng.standard_normal(x.shape)
    new = x - V.gradient(x) * dt + math.sqrt(2.0 * dt) * noise
    _check_blowup(new, state.time + dt)
    return ParticleState(new, state.time + dt, state.step_count + 1)


def _check_blowup(x, t):
    bad = ~np.isfinite(x) | (np.abs(x) > BLOWUP_RADIUS)
    if np.any(bad):
        idx = int(np.argwhere(bad)[0][0])
        raise NumericalBlowupError(f"particle {idx} left the finite region at t={t:.6g}", index=idx, time=t)


def _velocity(fn, x, t):
    v = np.asarray(fn(x), dtype=float)
    if not np.all(np.isfinite(v)):
        idx = int(np.argwhere(~np.isfinite(v))[0][0])
        raise NumericalBlowupError(f"non-finite velocity for particle {idx} at t={t:.6g}", index=idx, time=t)
    return v


def step(state: ParticleState, velocity_fn: Callable, spec: IntegratorSpec, dt: float | None = None) -> ParticleState:
    """Advance by one explicit-Euler or classical RK4 step; ``velocity_fn`` maps (N, d) -> (N, d)."""
    h = spec.dt if dt is None else dt
    x = state.positions
    t = state.time
    if spec.scheme == "explicit-euler":
        new = x + h * _velocity(velocity_fn, x, t)
    else:
        k1 = _velocity(velocity_fn, x, t)
        k2 = _velocity(velocity_fn, x + 0.5 * h * k1, t)
        k3 = _velocity(velocity_fn, x + 0.5 * h * k2, t)
        k4 = _velocity(velocity_fn, x + h * k3, t)
        new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_blowup(new, t + h)
    return ParticleState(new, t + h, state.step_count + 1)


def h_n(state, V: Potential) -> float:
    """H_N(x) = (1/N) sum_i V(x_i) + 1."""
    x = _positions(state)
    return float(np.mean(V.value(x))) + 1.0


def interaction_energy(state, k: Kernel) -> float:
    """E(x) = (1/N) sum_{i<j} K(x_i - x_j)."""
    x = _positions(state)
    n = len(x)
    if n < 2:
        warnings.warn("interaction energy of fewer than two particles is an empty sum", stacklevel=2)
        return 0.0
    _check_dims(x, k, None)
    rows = _pairwise.kernel_rows(x, x, np.ones(n), k.variance, k.norm)
    return 0.5 * (_pairwise.fixed_sum(rows) - n * k.norm) / n


def ksd_squared(state, k: Kernel, V: Potential, weights=None) -> float:
    x = _positions(state)
    _check_dims(x, k, V)
    gv = np.ascontiguousarray(V.gradient(x))
    rows = _pairwise.stein_kernel_rows(x, _weights(len(x), weights), gv, k.variance, k.norm)
    return _pairwise.fixed_sum(rows)


def potential_quadratic_form(state, k: Kernel, V: Potential) -> tuple[float, float]:
    """(1/N^2) sum_ij K(x_i - x_j) grad V(x_i).grad V(x_j) and its diagonal scale."""
    x = _positions(state)
    n = len(x)
    gv = np.ascontiguousarray(V.gradient(x))
    rows = _pairwise.weighted_gram_rows(x, np.full(n, 1.0 / n), gv, k.variance, k.norm)
    scale = k.norm * float(np.sum(gv * gv)) / n**2
    return _pairwise.fixed_sum(rows), scale


@dataclass
class Trajectory:
    final: ParticleState
    times: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    positions: list = field(default_factory=list)
    failure: Exception | None = None

    def series(self, name) -> np.ndarray:
        return np.asarray(self.diagnostics[name])


DIAGNOSTICS = ("H_N", "E", "KSD2")


def _diagnose(state, k, V, names):
    row = {"t": state.time}
    if "H_N" in names:
        row["H_N"] = h_n(state, V)
    if "E" in names:
        row["E"] = interaction_energy(state, k) if state.n > 1 else 0.0
    if "KSD2" in names:
        row["KSD2"] = ksd_squared(state, k, V)
    return row


def velocity_function(dynamics: str, k: Kernel, V: Potential):
    if dynamics == "svgd":
        return lambda x: svgd_velocity(x, k, V)
    if dynamics == "mckean-vlasov":
        return lambda x: mckean_vlasov_velocity(x, k, V)
    raise InvalidParameterError(f"dynamics {dynamics!r} has no deterministic velocity")


def integrate(
    initial: ParticleState,
    dynamics: str,
    k: Kernel,
    V: Potential,
    spec: IntegratorSpec,
    observers: Sequence[Callable] = (),
    cadence: int = 1,
    rng: np.random.Generator | None = None,
    diagnostics: Sequence[str] = DIAGNOSTICS,
    record_positions: bool = False,
    steps: int | None = None,
) -> Trajectory:
    """Run ``dynamics`` to ``spec.t_final`` and collect diagnostics every ``cadence`` steps.

    Observers are called as ``observer(state, row)`` at t = 0, at every
    ``cadence``-th step and at the final step. A blow-up re-raises
    :class:`NumericalBlowupError` with the partial trajectory attached.
    """
    if dynamics not in DYNAMICS:
        raise InvalidParameterError(f"unknown dynamics {dynamics!r}; known: {DYNAMICS}")
    if cadence < 1:
        raise InvalidParameterError("observer cadence must be at least 1 step")
    _check_dims(initial.positions, k, V)
    if dynamics == "ula" and rng is None:
        raise InvalidParameterError("ULA needs a seeded generator")
    n_steps = spec.n_steps if steps is None else int(steps)
    names = tuple(diagnostics)
    traj = Trajectory(initial, diagnostics={name: [] for name in names})

    def observe(state):
        row = _diagnose(state, k, V, names)
        traj.times.append(state.time)
        for name in names:
            traj.diagnostics[name].append(row[name])
        if record_positions:
            traj.positions.append(state.positions.copy())
        for obs in observers:
            obs(state, row)

    fn = None if dynamics == "ula" else velocity_function(dynamics, k, V)
    state = initial
    observe(state)
    for n in range(1, n_steps + 1):
        # times sit on the mesh n dt, and the last step lands exactly on t_final
        t_next = min(n * spec.dt, spec.t_final) if steps is None else n * spec.dt
        dt = t_next - state.time
        try:
            if fn is None:
                state = ula_step(state, V, dt, rng)
            else:
                state = step(state, fn, spec, dt=dt)
            state = ParticleState(state.positions, t_next, state.step_count)
        except NumericalBlowupError as exc:
            traj.final = state
            traj.failure = exc
            exc.diagnostics = traj
            log.error("integration aborted: %s", exc)
            raise
        if n % cadence == 0 or n == n_steps:
            observe(state)
    traj.final = state
    return traj


@dataclass
class DissipationReport:
    minimum: float
    scale: float
    values: np.ndarray
    passed: bool

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} min kernel quadratic form {self.minimum:.3e} (scale {self.scale:.3e})"


def ksd_dissipation_check(positions_series, k: Kernel, V: Potential, rel_tol: float = 1e-10) -> DissipationReport:
    """Minimum over recorded states of sum_ij K(x_i - x_j) grad V(x_i).grad V(x_j) / N^2.

    ``positions_series`` is a :class:`Trajectory` recorded with positions or a
    sequence of (N, d) arrays.
    """
    series = positions_series.positions if isinstance(positions_series, Trajectory) else positions_series
    if len(series) == 0:
        raise InvalidParameterError("no recorded positions; integrate with record_positions=True")
    vals, scales = zip(*(potential_quadratic_form(x, k, V) for x in series))
    vals = np.asarray(vals)
    scale = max(max(scales), np.finfo(float).tiny)
    return DissipationReport(float(vals.min()), scale, vals, bool(vals.min() >= -rel_tol * scale))


def hn_growth_bound(k: Kernel, V: Potential) -> float:
    """Rate C with d/dt H_N <= C H_N along SVGD.

    d/dt (1/N) sum V(x_i) <= ||grad K||_inf (1/N) sum |grad V(x_i)| once the
    kernel quadratic form is dropped, and |grad V| <= max(1, C_V)^(1/q) (1 + V).
    """
    return k.grad_sup * max(1.0, V.growth_constant()) ** (1.0 / V.q)


