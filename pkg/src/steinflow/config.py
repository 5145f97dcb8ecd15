"""Run configuration: TOML files flattened to dotted keys, strict key checking, overrides.

A config file looks like::

    [kernel]
    variance = 2.0

    [potential]
    family = "monomial"
    p = 4

and is read as ``{"kernel.variance": 2.0, "potential.family": "monomial", ...}``.
Keys absent from the schema are rejected by name.
"""

from __future__ import annotations

import copy
from typing import Any, Mapping

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .densities import NormalMixture, normal
from .errors import ConfigError, InvalidParameterError
from .kernels import Kernel
from .potentials import Potential, make_potential

SCHEMA: dict[str, Any] = {
    "kernel.family": "gaussian",
    "kernel.variance": 2.0,
    "kernel.dimension": 1,
    "potential.family": "quadratic",
    "potential.A": None,
    "potential.m": 1.0,
    "potential.p": 4,
    "potential.a": 1.0,
    "potential.b": 1.0,
    "initial.family": "normal",
    "initial.mean": 0.0,
    "initial.std": 1.0,
    "initial.weights": None,
    "initial.means": None,
    "initial.stds": None,
    "particles.N": 64,
    "particles.dynamics": "svgd",
    "particles.placement": "quantile",
    "integrator.scheme": "explicit-euler",
    "integrator.dt": 0.01,
    "integrator.t_final": 5.0,
    "integrator.cadence": 1,
    "grid.half_width": 10.0,
    "grid.cells": 1000,
    "grid.method": "auto",
    "pde.solver": "fv",
    "pde.t_final": 5.0,
    "pde.cfl": 0.45,
    "pde.dt_max": 0.05,
    "pde.cadence": 1,
    "pde.checkpoints": [],
    "pde.ensemble": 800,
    "pde.dt": 0.01,
    "run.seed": 0,
}


def flatten(tree: Mapping, prefix: str = "") -> dict:
    out = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            out.update(flatten(value, name + "."))
        else:
            out[name] = value
    return out


def parse_value(text: str):
    """Interpret an override value as a TOML literal, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def parse_override(item: str) -> tuple[str, Any]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, text = item.split("=", 1)
    return key.strip(), parse_value(text.strip())


def _check_keys(values: Mapping, schema: Mapping, origin: str):
    unknown = sorted(set(values) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r} in {origin}" + (f" (and {len(unknown) - 1} more)" if len(unknown) > 1 else ""))


def load_config(path=None, overrides=(), defaults: Mapping | None = None, extra_schema: Mapping | None = None) -> dict:
    """Merge schema defaults, experiment defaults, the file at ``path`` and ``overrides``."""
    schema = dict(SCHEMA)
    if extra_schema:
        schema.update(extra_schema)
    cfg = copy.deepcopy(schema)
    if defaults:
        _check_keys(defaults, schema, "defaults")
        cfg.update(copy.deepcopy(dict(defaults)))
    if path is not None:
        try:
            with open(path, "rb") as fh:
                tree = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        flat = flatten(tree)
        _check_keys(flat, schema, str(path))
        cfg.update(flat)
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        _check_keys({key: value}, schema, "--override")
        cfg[key] = value
    return cfg


def snapshot(cfg: Mapping) -> dict:
    """JSON-safe copy of a flat config."""
    out = {}
    for key, value in cfg.items():
        if isinstance(value, np.ndarray):
            value = value.tolist()
        out[key] = value
    return out


def build_kernel(cfg: Mapping) -> Kernel:
    try:
        return Kernel(cfg["kernel.family"], float(cfg["kernel.variance"]), int(cfg["kernel.dimension"]))
    except (InvalidParameterError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid kernel settings: {exc}") from exc


def build_potential(cfg: Mapping, family: str | None = None) -> Potential:
    family = family or cfg["potential.family"]
    d = int(cfg["kernel.dimension"])
    try:
        if family == "quadratic":
            a = cfg["potential.A"]
            return make_potential("quadratic", d, A=np.eye(d) if a is None else a)
        if family == "monomial":
            return make_potential("monomial", d, m=cfg["potential.m"], p=cfg["potential.p"])
        if family == "double_well":
            return make_potential("double_well", d, a=cfg["potential.a"], b=cfg["potential.b"])
        return make_potential(family, d)
    except (InvalidParameterError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid potential settings: {exc}") from exc


def build_initial(cfg: Mapping) -> NormalMixture:
    d = int(cfg["kernel.dimension"])
    try:
        if cfg["initial.family"] == "normal":
            return normal(float(cfg["initial.mean"]), float(cfg["initial.std"]), d)
        if cfg["initial.family"] == "mixture":
            return NormalMixture(
                tuple(cfg["initial.weights"]), tuple(cfg["initial.means"]), tuple(cfg["initial.stds"]), d
            )
    except (InvalidParameterError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid initial-condition settings: {exc}") from exc
    raise ConfigError(f"unknown initial family {cfg['initial.family']!r}; known: normal, mixture")
