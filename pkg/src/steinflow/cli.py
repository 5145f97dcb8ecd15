"""Command-line entry point: ``steinflow simulate | pde | experiment``.

Exit codes: 0 success, 1 a FAIL line in an experiment, 2 configuration
error, 3 numerical failure (blow-up, time-step underflow, domain truncation).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import __version__
from . import config as cfgmod
from .densities import quantile_positions, sample_positions
from .errors import ConfigError, InvalidParameterError, NumericalBlowupError, StepRejectedError, TruncationError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .meanfield.characteristics import characteristic_solve, ensemble_to_grid, quadrature_ensemble
from .meanfield.fv import COLUMNS as PDE_COLUMNS
from .meanfield.fv import _kl, fv_solve
from .meanfield.grid import GridDensity, GridOperators
from .meanfield.velocity import grid_dissipation, norm_monitor
from .particles import IntegratorSpec, ParticleState, integrate
from .potentials import target_density

log = logging.getLogger("steinflow")

OUTPUT_SCHEMA = {"output.snapshot_cadence": 0, "pde.report_every": 0.1}


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _fmt(v):
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_manifest(out_dir, cfg, seed, started, files):
    """Write manifest.json atomically (temporary file, then rename)."""
    manifest = {
        "config": cfgmod.snapshot(cfg),
        "seed": seed,
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": sorted(os.path.relpath(f, out_dir) for f in files),
    }
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest-", suffix=".json")
    with os.fdopen(fd, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    path = os.path.join(out_dir, "manifest.json")
    os.replace(tmp, path)
    return path


def _load(args, extra=None, defaults=None):
    cfg = cfgmod.load_config(args.config, args.override or (), defaults=defaults, extra_schema={**OUTPUT_SCHEMA, **(extra or {})})
    if args.seed is not None:
        cfg["run.seed"] = int(args.seed)
    return cfg


def _snapshot_particles(path, x):
    write_csv(path, [f"x{i}" for i in range(x.shape[1])], x)
    return path


def cmd_simulate(args) -> int:
    started = _now()
    cfg = _load(args)
    k, V, nu0 = cfgmod.build_kernel(cfg), cfgmod.build_potential(cfg), cfgmod.build_initial(cfg)
    seed = int(cfg["run.seed"])
    rng = np.random.default_rng(seed)
    n = int(cfg["particles.N"])
    if cfg["particles.placement"] == "quantile" and k.dimension == 1:
        x0 = quantile_positions(nu0, n)
    elif cfg["particles.placement"] in ("quantile", "sample"):
        x0 = sample_positions(nu0, n, rng)
    else:
        raise ConfigError(f"unknown placement {cfg['particles.placement']!r}; use quantile or sample")
    try:
        spec = IntegratorSpec(cfg["integrator.scheme"], float(cfg["integrator.dt"]), float(cfg["integrator.t_final"]))
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc
    out = args.out
    os.makedirs(os.path.join(out, "snapshots"), exist_ok=True)
    files = []
    snap_every = int(cfg["output.snapshot_cadence"])
    counter = [0]

    def snap(state, row):
        if snap_every and counter[0] % snap_every == 0:
            name = f"particles_step{state.step_count:07d}.csv"
            files.append(_snapshot_particles(os.path.join(out, "snapshots", name), state.positions))
        counter[0] += 1

    files.append(_snapshot_particles(os.path.join(out, "snapshots", "initial.csv"), x0))
    status = 0
    try:
        traj = integrate(
            ParticleState(x0), cfg["particles.dynamics"], k, V, spec, observers=[snap],
            cadence=int(cfg["integrator.cadence"]), rng=rng,
        )
    except NumericalBlowupError as exc:
        traj = exc.diagnostics
        print(f"error: {exc}", file=sys.stderr)
        status = 3
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc
    names = list(traj.diagnostics)
    rows = zip(traj.times, *(traj.diagnostics[nm] for nm in names))
    files.append(write_csv(os.path.join(out, "diagnostics.csv"), ["t"] + names, rows))
    files.append(_snapshot_particles(os.path.join(out, "snapshots", "final.csv"), traj.final.positions))
    write_manifest(out, cfg, seed, started, files)
    return status


def _density_snapshot(path, rho: GridDensity):
    return write_csv(path, ["x", "density"], zip(rho.centers, rho.values))


def cmd_pde(args) -> int:
    started = _now()
    cfg = _load(args)
    k, V, nu0 = cfgmod.build_kernel(cfg), cfgmod.build_potential(cfg), cfgmod.build_initial(cfg)
    if k.dimension != 1:
        raise ConfigError("the PDE solvers are one-dimensional; set kernel.dimension = 1")
    L, M = float(cfg["grid.half_width"]), int(cfg["grid.cells"])
    T = float(cfg["pde.t_final"])
    every = float(cfg["pde.report_every"])
    report = [every * i for i in range(1, int(np.floor(T / every + 1e-9)) + 1)] if every > 0 else []
    snaps_at = sorted({float(t) for t in cfg["pde.checkpoints"]} | {T})
    out = args.out
    os.makedirs(os.path.join(out, "snapshots"), exist_ok=True)
    files = []
    target = target_density(V, (-L, L), M, tail_tol=np.inf)
    rho0 = GridDensity.from_pdf(nu0.pdf, L, M)
    status = 0
    solver = cfg["pde.solver"]
    try:
        if solver == "fv":
            traj = fv_solve(
                rho0, k, V, T, checkpoints=sorted(set(report) | set(snaps_at)),
                cadence=int(cfg["pde.cadence"]) if every <= 0 else 10**12,
                cfl=float(cfg["pde.cfl"]), dt_max=float(cfg["pde.dt_max"]), target=target, method=cfg["grid.method"],
            )
            rows = traj.rows
            snaps = {t: traj.snapshots[t] for t in snaps_at if t in traj.snapshots}
        elif solver == "characteristics":
            ens = quadrature_ensemble(nu0, int(cfg["pde.ensemble"]))
            stops = sorted(set(report) | set(snaps_at))
            ch = characteristic_solve(ens, k, V, T, IntegratorSpec("rk4", float(cfg["pde.dt"]), T), checkpoints=stops)
            ops = GridOperators.for_grid(rho0, k, V, cfg["grid.method"])
            grids = {0.0: rho0}
            grids.update({t: ensemble_to_grid(e, L, M) for t, e in ch.snapshots.items()})
            rows = []
            for t in [0.0] + (report if report else stops):
                g = grids[t]
                rows.append((t, g.mass, _kl(g.values, g.h, target.log_values), grid_dissipation(g, ops), *norm_monitor(g, V)))
            snaps = {t: grids[t] for t in snaps_at}
        else:
            raise ConfigError(f"unknown pde.solver {solver!r}; use fv or characteristics")
    except (StepRejectedError, TruncationError, NumericalBlowupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        files.append(_density_snapshot(os.path.join(out, "snapshots", "initial.csv"), rho0))
        write_manifest(out, cfg, int(cfg["run.seed"]), started, files)
        return 3
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc
    files.append(write_csv(os.path.join(out, "diagnostics.csv"), PDE_COLUMNS, rows))
    files.append(_density_snapshot(os.path.join(out, "snapshots", "density_t0.csv"), rho0))
    for t, g in sorted(snaps.items()):
        files.append(_density_snapshot(os.path.join(out, "snapshots", f"density_t{t:g}.csv"), g))
    write_manifest(out, cfg, int(cfg["run.seed"]), started, files)
    return status


def cmd_experiment(args) -> int:
    if args.name not in EXPERIMENTS:
        print(f"error: unknown experiment {args.name!r}; valid names: {', '.join(EXPERIMENTS)}", file=sys.stderr)
        return 2
    started = _now()
    cfg = ExperimentConfig.load(args.name, args.config, args.override or (), out_dir=args.out, seed=args.seed)
    try:
        rep = run_experiment(cfg)
    except (StepRejectedError, TruncationError, NumericalBlowupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    files = [os.path.join(args.out, f"{t}.csv") for t in rep.tables] + [os.path.join(args.out, "summary.txt")]
    write_manifest(args.out, cfg.values, cfg.seed, started, files)
    print(rep.summary(), end="")
    for c in rep.checks:
        if not c.passed:
            print(c.line(), file=sys.stderr)
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steinflow", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_out):
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--seed", type=int, help="overrides run.seed")
        p.add_argument("--out", default=default_out, help="output directory")
        p.add_argument("--override", action="append", metavar="KEY=VALUE", help="set a dotted config key (repeatable)")

    common(sub.add_parser("simulate", help="run an N-particle system"), "steinflow-out/simulate")
    common(sub.add_parser("pde", help="solve the mean-field PDE on a grid"), "steinflow-out/pde")
    p = sub.add_parser("experiment", help=f"run a validation study ({', '.join(EXPERIMENTS)})")
    p.add_argument("name")
    common(p, None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "experiment" and args.out is None:
        args.out = os.path.join("steinflow-out", args.name)
    handlers = {"simulate": cmd_simulate, "pde": cmd_pde, "experiment": cmd_experiment}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
