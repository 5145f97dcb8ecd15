"""Mean-field PDE solvers on a 1-D grid and on characteristic ensembles."""

from .characteristics import (
    WeightedEnsemble,
    characteristic_solve,
    ensemble_to_grid,
    quadrature_ensemble,
)
from .fv import fv_solve, fv_step
from .grid import GridDensity, GridOperators
from .picard import picard_flow_map
from .velocity import VelocityField, norm_monitor, stationarity_residual, velocity_field

__all__ = [
    "GridDensity",
    "GridOperators",
    "VelocityField",
    "WeightedEnsemble",
    "characteristic_solve",
    "ensemble_to_grid",
    "fv_solve",
    "fv_step",
    "norm_monitor",
    "picard_flow_map",
    "quadrature_ensemble",
    "stationarity_residual",
    "velocity_field",
]
