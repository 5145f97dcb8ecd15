"""Validation studies wiring particles, mean-field solvers and metrics together.

Each experiment takes an :class:`ExperimentConfig` and returns a
:class:`Report` holding named PASS/FAIL checks and raw tables. Reports write
one CSV per table plus ``summary.txt``.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import config as cfgmod
from .densities import NormalMixture, normal, quantile_positions, sample_positions
from .errors import InvalidParameterError
from .kernels import Kernel
from .meanfield.characteristics import characteristic_solve, ensemble_to_grid, quadrature_ensemble
from .meanfield.fv import fv_solve
from .meanfield.grid import GridDensity
from .meanfield.picard import picard_flow_map
from .meanfield.velocity import stationarity_residual
from .metrics import EmpiricalMeasure, wasserstein_1d
from .particles import (
    IntegratorSpec,
    ParticleState,
    h_n,
    hn_growth_bound,
    integrate,
    step,
    velocity_function,
)
from .potentials import Potential, make_potential, target_density


# ---------------------------------------------------------------- reports


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)

    def add(self, *row):
        self.rows.append(tuple(row))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


@dataclass
class Report:
    name: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))

    def summary(self) -> str:
        head = f"{'PASS' if self.passed else 'FAIL'} experiment {self.name}"
        return "\n".join([head] + [c.line() for c in self.checks]) + "\n"

    def write(self, out_dir) -> list:
        os.makedirs(out_dir, exist_ok=True)
        files = []
        for tname, table in self.tables.items():
            path = os.path.join(out_dir, f"{tname}.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(table.columns)
                for row in table.rows:
                    w.writerow([_fmt(v) for v in row])
            files.append(path)
        path = os.path.join(out_dir, "summary.txt")
        with open(path, "w") as fh:
            fh.write(self.summary())
        files.append(path)
        return files


@dataclass
class ExperimentConfig:
    """Flat dotted-key settings for one experiment; see ``EXPERIMENTS`` for per-experiment keys."""

    name: str
    values: dict
    out_dir: str | None = None

    @classmethod
    def load(cls, name, path=None, overrides=(), out_dir=None, seed=None) -> "ExperimentConfig":
        if name not in EXPERIMENTS:
            raise cfgmod.ConfigError(f"unknown experiment {name!r}; valid: {', '.join(EXPERIMENTS)}")
        _, defaults, extra = EXPERIMENTS[name]
        values = cfgmod.load_config(path, overrides, defaults=defaults, extra_schema=extra)
        if seed is not None:
            values["run.seed"] = int(seed)
        return cls(name, values, out_dir)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return int(self.values["run.seed"])

    def kernel(self) -> Kernel:
        return cfgmod.build_kernel(self.values)

    def potential(self, family=None) -> Potential:
        return cfgmod.build_potential(self.values, family)

    def initial(self) -> NormalMixture:
        return cfgmod.build_initial(self.values)


# ---------------------------------------------------------------- helpers


def particle_snapshots(x0, dynamics, k, V, dt, times, scheme="rk4", every_step: Callable | None = None):
    """Positions at each time in ``times`` (steps shortened to land on them).

    ``every_step(t, x)`` is called at t = 0 and after every step when given.
    """
    fn = velocity_function(dynamics, k, V)
    spec = IntegratorSpec(scheme, dt, max(max(times), dt))
    state = ParticleState(x0)
    out = {}
    if every_step:
        every_step(0.0, state.positions)
    if 0.0 in times:
        out[0.0] = state.positions.copy()
    for stop in sorted(t for t in times if t > 0):
        while state.time < stop - 1e-12 * max(1.0, stop):
            h = min(dt, stop - state.time)
            state = step(state, fn, spec, dt=h)
            if stop - state.time <= 1e-12 * max(1.0, stop):
                state = ParticleState(state.positions, stop, state.step_count)
            if every_step:
                every_step(state.time, state.positions)
        out[stop] = state.positions.copy()
    return out


def _grid_initial(dist, half_width, cells):
    return GridDensity.from_pdf(dist.pdf, half_width, cells)


def _target_grid(V, half_width, cells):
    return target_density(V, (-half_width, half_width), cells, tail_tol=math.inf)


def _target_quantiles(V, n, half_width=12.0, cells=24000):
    """Quantile placement for e^{-V}/Z through its grid CDF (exact for normals via ppf)."""
    if V.family == "quadratic" and V.dimension == 1:
        return quantile_positions(normal(0.0, 1.0 / math.sqrt(float(V.params["A"][0, 0]))), n)
    return quantile_positions(_target_grid(V, half_width, cells).grid, n)


# ---------------------------------------------------------------- experiments


def exp_mean_field_convergence(cfg: ExperimentConfig) -> Report:
    """W1(mu^N_t, rho_t) against a fine finite-volume reference, over an N sweep."""
    k, V, nu0 = cfg.kernel(), cfg.potential(), cfg.initial()
    ns = [int(n) for n in cfg["experiment.N"]]
    times = [float(t) for t in cfg["experiment.times"]]
    L, M = float(cfg["grid.half_width"]), int(cfg["experiment.reference_cells"])
    ref = fv_solve(_grid_initial(nu0, L, M), k, V, max(times), checkpoints=times, method=cfg["grid.method"])
    snaps = dict(ref.snapshots)
    snaps[0.0] = _grid_initial(nu0, L, M)
    rep = Report(cfg.name)
    table = Table(("N", "t", "W1"))
    errors = {}
    for n in ns:
        x0 = quantile_positions(nu0, n) if cfg["particles.placement"] == "quantile" else sample_positions(
            nu0, n, np.random.default_rng(cfg.seed)
        )
        pos = particle_snapshots(x0, "svgd", k, V, float(cfg["integrator.dt"]), [0.0] + times, cfg["integrator.scheme"])
        for t in [0.0] + times:
            w = wasserstein_1d(EmpiricalMeasure(pos[t]), snaps[t])
            errors[(n, t)] = w
            table.add(n, t, w)
    rep.tables["w1_by_N"] = table
    thr = float(cfg["experiment.threshold"])
    for t in times:
        seq = [errors[(n, t)] for n in ns]
        dec = all(b < a for a, b in zip(seq, seq[1:]))
        rep.check(f"W1 strictly decreasing in N at t={t:g}", dec, " > ".join(f"{v:.3e}" for v in seq))
        rep.check(f"largest-N W1 below {thr:g} at t={t:g}", seq[-1] < thr, f"W1(N={ns[-1]}) = {seq[-1]:.3e}")
    return rep


def exp_stability(cfg: ExperimentConfig) -> Report:
    """Ratio sup_t W_p(mu1_t, mu2_t) / W_p(nu1, nu2) over a perturbation sweep, p conjugate to q."""
    k, nu0 = cfg.kernel(), cfg.initial()
    n = int(cfg["particles.N"])
    T = float(cfg["experiment.T"])
    dt = float(cfg["integrator.dt"])
    eps_list = [float(e) for e in cfg["experiment.eps"]]
    mode = cfg["experiment.perturbation"]
    rep = Report(cfg.name)
    table = Table(("potential", "p", "eps", "W_p_initial", "sup_W_p", "W_p_final", "ratio"))
    x1 = quantile_positions(nu0, n)
    for family in cfg["experiment.potentials"]:
        V = cfg.potential(family)
        p = V.q_conjugate
        ratios = []
        base = particle_snapshots(x1, "svgd", k, V, dt, _mesh(T, dt), cfg["integrator.scheme"])
        for eps in eps_list:
            if mode == "shift":
                x2 = x1 + eps
            elif mode == "scale":
                x2 = x1 * (1.0 + eps)
            else:
                raise InvalidParameterError(f"unknown perturbation {mode!r}; use shift or scale")
            other = particle_snapshots(x2, "svgd", k, V, dt, _mesh(T, dt), cfg["integrator.scheme"])
            w0 = wasserstein_1d(x1, x2, p)
            dist = [wasserstein_1d(base[t], other[t], p) for t in sorted(base)]
            sup = max(dist)
            ratios.append(sup / w0)
            table.add(family, p, eps, w0, sup, dist[-1], sup / w0)
        spread = max(ratios) / min(ratios)
        rep.check(
            f"{family} (p={p:g}) ratio spread below {cfg['experiment.max_spread']:g}",
            spread < float(cfg["experiment.max_spread"]),
            f"r = {', '.join(f'{r:.4f}' for r in ratios)}; max/min = {spread:.4f}",
        )
    rep.tables["stability"] = table
    return rep


def _mesh(T, dt):
    n = int(math.ceil(T / dt - 1e-9))
    return [min(T, i * dt) for i in range(n + 1)]


def exp_longtime(cfg: ExperimentConfig) -> Report:
    """Long FV run toward e^{-V}/Z: KL, dissipation, W1 and the half-kernel residual."""
    k, V, nu0 = cfg.kernel(), cfg.potential(), cfg.initial()
    L, M = float(cfg["grid.half_width"]), int(cfg["grid.cells"])
    T = float(cfg["pde.t_final"])
    target = _target_grid(V, L, M)
    every = float(cfg["experiment.report_every"])
    checkpoints = [every * i for i in range(1, int(T / every) + 1) if every * i < T]
    traj = fv_solve(
        _grid_initial(nu0, L, M), k, V, T, checkpoints=checkpoints, cadence=int(cfg["pde.cadence"]),
        cfl=float(cfg["pde.cfl"]), dt_max=float(cfg["pde.dt_max"]), target=target, method=cfg["grid.method"],
    )
    rep = Report(cfg.name)
    rows = Table(("t", "mass", "KL", "dissipation", "l1_v", "w11_v"))
    for r in traj.rows:
        rows.add(*r)
    rep.tables["diagnostics"] = rows
    snaps = Table(("t", "W1_to_target", "flux_residual", "half_kernel_residual"))
    for t, rho in sorted(traj.snapshots.items()):
        flux, res = stationarity_residual(rho, k, V)
        snaps.add(t, wasserstein_1d(rho, target.grid), flux, res)
    rep.tables["convergence"] = snaps
    final = traj.final
    w1 = wasserstein_1d(final, target.grid)
    _, res = stationarity_residual(final, k, V)
    diss = traj.rows[-1][3]
    rep.check("KL non-increasing", traj.max_kl_increase <= 1e-8, f"largest one-step KL change {traj.max_kl_increase:.3e}")
    rep.check("dissipation below 1e-6 at t_final", diss < 1e-6, f"dissipation({T:g}) = {diss:.3e}")
    thr = float(cfg["experiment.w1_threshold"])
    rep.check(f"W1 to target below {thr:g} at t_final", w1 < thr, f"W1({T:g}) = {w1:.4e}")
    rthr = float(cfg["experiment.residual_threshold"])
    rep.check(f"half-kernel residual below {rthr:g} at t_final", res < rthr, f"||K_half*(rho'+V'rho)||_2 = {res:.3e}")
    worst, table = dissipation_identity(cfg, k, V, nu0)
    rep.tables["dissipation_identity"] = table
    rep.check("dissipation equals -dKL/dt within 3%", worst < 0.03, f"max relative mismatch {worst:.3e}")
    return rep


def dissipation_identity(cfg, k, V, nu0):
    """Centred finite difference of KL against the quadrature dissipation at fixed small dt."""
    L = float(cfg["experiment.identity_half_width"])
    M = int(cfg["experiment.identity_cells"])
    dt = float(cfg["experiment.identity_dt"])
    T = float(cfg["experiment.identity_t"])
    traj = fv_solve(_grid_initial(nu0, L, M), k, V, T, dt_max=dt, cadence=1, method=cfg["grid.method"])
    t = traj.column("t")
    kl = traj.column("KL")
    d = traj.column("dissipation")
    fd = -(kl[2:] - kl[:-2]) / (t[2:] - t[:-2])
    rel = np.abs(fd - d[1:-1]) / d[1:-1]
    table = Table(("t", "minus_dKL_dt", "dissipation", "relative_mismatch"))
    stride = max(1, len(rel) // 50)
    for i in range(0, len(rel), stride):
        table.add(t[i + 1], fd[i], d[i + 1], rel[i])
    return float(np.max(rel)), table


def exp_hn_bound(cfg: ExperimentConfig) -> Report:
    """Per-step H_N growth against C(||grad K||, C_V), and the plateau of H_N under V = m|x|^p."""
    k = cfg.kernel()
    V = cfg.potential()
    rng = np.random.default_rng(cfg.seed)
    dt = float(cfg["integrator.dt"])
    T = float(cfg["experiment.T"])
    c_bound = hn_growth_bound(k, V)
    rep = Report(cfg.name)
    runs = Table(("run", "N", "fitted_C", "max_step_ratio"))
    worst_step, c_fit = -math.inf, -math.inf
    for r in range(int(cfg["experiment.runs"])):
        n = int(rng.integers(2, int(cfg["experiment.max_N"]) + 1))
        x0 = rng.normal(rng.uniform(-3, 3), rng.uniform(0.1, 2.0), (n, k.dimension))
        spec = IntegratorSpec(cfg["integrator.scheme"], dt, T)
        traj = integrate(ParticleState(x0), "svgd", k, V, spec, diagnostics=("H_N",))
        h = traj.series("H_N")
        t = np.asarray(traj.times)
        steps = np.diff(t)
        ratio = float(np.max(np.diff(h) / (steps * h[:-1])))
        fitted = float(np.max((np.log(h[1:]) - np.log(h[0])) / t[1:]))
        worst_step, c_fit = max(worst_step, ratio), max(c_fit, fitted)
        runs.add(r, n, fitted, ratio)
    rep.tables["exponential_bound"] = runs
    rep.check(
        "per-step H_N growth within C dt H_N",
        worst_step <= c_bound,
        f"max (dH/dt)/H = {worst_step:.4e} vs C = {c_bound:.4e}",
    )
    rep.check("single fitted exponential rate within C", c_fit <= c_bound, f"fitted C = {c_fit:.4e} vs C = {c_bound:.4e}")

    Vm = make_potential("monomial", k.dimension, m=float(cfg["experiment.plateau_m"]), p=int(cfg["experiment.plateau_p"]))
    n = int(cfg["particles.N"])
    x0 = quantile_positions(cfg.initial(), n) if k.dimension == 1 else sample_positions(cfg.initial(), n, rng)
    T_long = float(cfg["experiment.plateau_T"])
    traj = integrate(
        ParticleState(x0), "svgd", k, Vm, IntegratorSpec(cfg["integrator.scheme"], dt, T_long),
        diagnostics=("H_N",), cadence=1,
    )
    h = traj.series("H_N")
    t = np.asarray(traj.times)
    head = float(np.max(h[t <= 0.5 * T_long]))
    tail = float(np.max(h[t >= 0.5 * T_long]))
    series = Table(("t", "H_N"))
    stride = max(1, len(t) // 2000)
    for i in range(0, len(t), stride):
        series.add(t[i], h[i])
    rep.tables["plateau_series"] = series
    rep.check(
        "H_N plateau under V = m|x|^p",
        tail <= head + 1e-6 and math.isfinite(tail),
        f"tail max {tail:.10f} vs head max {head:.10f}",
    )
    return rep


def exp_mv_comparison(cfg: ExperimentConfig) -> Report:
    """Drift of SVGD and McKean-Vlasov particles started at the quadrature of e^{-V}/Z."""
    k, V = cfg.kernel(), cfg.potential()
    n = int(cfg["particles.N"])
    T = float(cfg["experiment.T"])
    dt = float(cfg["integrator.dt"])
    L, M = float(cfg["grid.half_width"]), int(cfg["experiment.reference_cells"])
    target = _target_grid(V, L, M).grid
    x0 = _target_quantiles(V, n)
    every = int(cfg["experiment.cadence"])
    table = Table(("t", "W1_svgd", "W1_mckean_vlasov"))
    series = {}
    for dyn in ("svgd", "mckean-vlasov"):
        rec = []
        counter = [0]

        def obs(t, x, rec=rec, counter=counter):
            if counter[0] % every == 0 or abs(t - T) < 1e-12:
                rec.append((t, wasserstein_1d(EmpiricalMeasure(x), target)))
            counter[0] += 1

        particle_snapshots(x0, dyn, k, V, dt, [T], cfg["integrator.scheme"], every_step=obs)
        series[dyn] = rec
    for (t, a), (_, b) in zip(series["svgd"], series["mckean-vlasov"]):
        table.add(t, a, b)
    rep = Report(cfg.name)
    rep.tables["drift"] = table
    svgd = max(w for _, w in series["svgd"])
    mv = max(w for _, w in series["mckean-vlasov"])
    budget = float(cfg["experiment.budget"])
    factor = float(cfg["experiment.factor"])
    rep.check(f"SVGD drift below {budget:g}", svgd < budget, f"sup_t W1(mu_t, rho_inf) = {svgd:.3e}")
    rep.check(f"McKean-Vlasov drift at least {factor:g}x SVGD drift", mv >= factor * svgd, f"{mv:.3e} vs {svgd:.3e} (ratio {mv / svgd:.1f})")
    return rep


def _crosscheck_initials(cfg):
    out = []
    for spec in cfg["experiment.initials"]:
        w, m, s = spec
        out.append(NormalMixture(tuple(w), tuple(m), tuple(s)))
    return out


def crosscheck_case(nu0, k, V, L, M, m_char, dt, times):
    """W1(FV, characteristics) at each time; characteristics reconstructed on the FV grid."""
    fv = fv_solve(_grid_initial(nu0, L, M), k, V, max(times), checkpoints=times)
    ch = characteristic_solve(quadrature_ensemble(nu0, m_char), k, V, max(times), IntegratorSpec("rk4", dt, max(times)), checkpoints=times)
    return {t: wasserstein_1d(fv.snapshots[t], ensemble_to_grid(ch.snapshots[t], L, M)) for t in times}


def exp_solver_crosscheck(cfg: ExperimentConfig) -> Report:
    """Finite volumes vs characteristics vs Picard iteration for the same initial data."""
    k, V = cfg.kernel(), cfg.potential()
    L, M = float(cfg["grid.half_width"]), int(cfg["grid.cells"])
    m_char = int(cfg["pde.ensemble"])
    dt = float(cfg["pde.dt"])
    times = [float(t) for t in cfg["experiment.times"]]
    tol = float(cfg["experiment.tolerance"])
    rep = Report(cfg.name)
    table = Table(("case", "t", "W1_fv_char"))
    worst, worst_case = -1.0, None
    inits = _crosscheck_initials(cfg)
    for i, nu0 in enumerate(inits):
        res = crosscheck_case(nu0, k, V, L, M, m_char, dt, times)
        for t in times:
            table.add(i, t, res[t])
            if res[t] > worst:
                worst, worst_case = res[t], i
    rep.tables["fv_vs_characteristics"] = table
    rep.check(f"FV vs characteristics within {tol:g}", worst < tol, f"max W1 = {worst:.3e} (case {worst_case})")

    refine = Table(("cells", "ensemble", "W1_max"))
    coarse = max(crosscheck_case(inits[worst_case], k, V, L, M, m_char, dt, times).values())
    fine = max(crosscheck_case(inits[worst_case], k, V, L, 2 * M, 2 * m_char, dt, times).values())
    refine.add(M, m_char, coarse)
    refine.add(2 * M, 2 * m_char, fine)
    rep.tables["refinement"] = refine
    rep.check("refinement shrinks the disagreement toward half", fine <= 0.6 * coarse, f"{coarse:.3e} -> {fine:.3e} (ratio {fine / coarse:.3f})")

    target = _target_grid(V, L, M)
    T_stat = max(times)
    fv = fv_solve(target.grid, k, V, T_stat, target=target)
    stat_fv = wasserstein_1d(fv.final, target.grid)
    nu_inf = quadrature_ensemble(target.grid, m_char)
    ch = characteristic_solve(nu_inf, k, V, T_stat, IntegratorSpec("rk4", dt, T_stat))
    stat_ch = float(np.max(np.abs(ch.final.points - nu_inf.points)))
    rep.check(f"target stationary under FV within {tol:g}", stat_fv < tol, f"W1 drift {stat_fv:.3e}")
    rep.check("target stationary under characteristics (max displacement < 1e-3)", stat_ch < 1e-3, f"{stat_ch:.3e}")

    T0 = float(cfg["experiment.picard_T0"])
    ptol = float(cfg["experiment.picard_tol"])
    nu0 = inits[0]
    ens = quadrature_ensemble(nu0, m_char)
    pic = picard_flow_map(ens, k, V, T0, tol=ptol, mesh=int(cfg["experiment.picard_mesh"]))
    ch = characteristic_solve(ens, k, V, T0, IntegratorSpec("rk4", T0 / int(cfg["experiment.picard_mesh"]), T0))
    fvp = fv_solve(_grid_initial(nu0, L, M), k, V, T0)
    sup = float(np.max(np.abs(pic.flow[-1] - ch.final.points)))
    w_pf = wasserstein_1d(fvp.final, ensemble_to_grid(pic.ensemble(ens), L, M))
    ptable = Table(("iteration", "sup_distance", "ratio"))
    for j, dist in enumerate(pic.distances):
        ptable.add(j + 1, dist, pic.ratios[j - 1] if j > 0 else float("nan"))
    rep.tables["picard"] = ptable
    rep.check(
        "Picard iterates contract geometrically",
        pic.converged and all(r < 1 for r in pic.ratios),
        f"{pic.iterations} iterations, max ratio {pic.contraction_factor:.3f}, horizon estimate {pic.horizon_estimate:.3f}",
    )
    rep.check(f"Picard matches characteristics within 10*tol on [0, {T0:g}]", sup <= 10 * ptol, f"sup difference {sup:.3e}")
    rep.check(f"Picard vs FV within {tol:g}", w_pf < tol, f"W1 = {w_pf:.3e}")
    return rep


# ---------------------------------------------------------------- registry

_X = "experiment."

EXPERIMENTS: dict[str, tuple] = {
    "mean-field": (
        exp_mean_field_convergence,
        {"initial.mean": 2.0, "integrator.scheme": "rk4", "grid.half_width": 10.0},
        {_X + "N": [64, 256, 1024, 4096], _X + "times": [0.5, 1.0, 2.0], _X + "threshold": 5e-3, _X + "reference_cells": 4000},
    ),
    "stability": (
        exp_stability,
        {"initial.mean": 1.0, "integrator.scheme": "rk4", "particles.N": 1000},
        {
            _X + "eps": [0.2, 0.1, 0.05, 0.025],
            _X + "T": 2.0,
            _X + "potentials": ["quadratic", "monomial"],
            _X + "perturbation": "shift",
            _X + "max_spread": 3.0,
        },
    ),
    "longtime": (
        exp_longtime,
        {"initial.mean": 2.0, "pde.t_final": 200.0, "pde.cadence": 200},
        {
            _X + "report_every": 10.0,
            _X + "w1_threshold": 1e-2,
            _X + "residual_threshold": 1e-4,
            _X + "identity_cells": 2000,
            _X + "identity_half_width": 10.0,
            _X + "identity_dt": 1e-3,
            _X + "identity_t": 0.5,
        },
    ),
    "hn-bound": (
        exp_hn_bound,
        {"initial.std": 1.5},
        {_X + "runs": 20, _X + "max_N": 128, _X + "T": 5.0, _X + "plateau_m": 1.0, _X + "plateau_p": 4, _X + "plateau_T": 200.0},
    ),
    "mv-comparison": (
        exp_mv_comparison,
        {"particles.N": 800, "integrator.scheme": "rk4"},
        {_X + "T": 10.0, _X + "budget": 5e-3, _X + "factor": 5.0, _X + "cadence": 10, _X + "reference_cells": 4000},
    ),
    "crosscheck": (
        exp_solver_crosscheck,
        {"grid.half_width": 12.0},
        {
            _X + "times": [0.5, 1.0, 2.0],
            _X + "tolerance": 5e-3,
            _X + "initials": [
                [[1.0], [2.0], [1.0]],
                [[1.0], [0.0], [2.0]],
                [[0.5, 0.5], [-2.0, 2.0], [0.7, 0.7]],
                [[1.0], [-1.0], [0.5]],
                [[1.0], [1.0], [1.5]],
            ],
            _X + "picard_T0": 0.25,
            _X + "picard_tol": 1e-9,
            _X + "picard_mesh": 200,
        },
    ),
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    fn = EXPERIMENTS[cfg.name][0]
    rep = fn(cfg)
    if cfg.out_dir:
        rep.write(cfg.out_dir)
    return rep
