"""Uniform 1-D grids, Toeplitz convolution operators and grid diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import fftconvolve

from ..errors import InvalidParameterError, TruncationError
from ..kernels import Kernel

MASS_TOL = 1e-8
BOUNDARY_TOL = 1e-8


@dataclass
class GridDensity:
    """Cell values of a probability density on ``[-L, L]`` split into ``M`` equal cells.

    Values are samples at the cell centres; for cumulative quantities (CDF,
    quantiles, Wasserstein) each cell is read as carrying mass ``h * value``
    spread uniformly over the cell.
    """

    half_width: float
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) < 2:
            raise InvalidParameterError("grid values must be a 1-D array with at least two cells")
        if not self.half_width > 0:
            raise InvalidParameterError(f"half width must be positive, got {self.half_width}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("grid values must be finite")

    @classmethod
    def from_pdf(cls, pdf, half_width: float, cells: int, time: float = 0.0) -> "GridDensity":
        """Sample ``pdf`` at the cell centres and renormalise to unit mass."""
        h = 2.0 * half_width / cells
        centers = -half_width + h * (np.arange(cells) + 0.5)
        vals = np.asarray(pdf(centers), dtype=float).reshape(cells)
        return cls(half_width, vals / (h * vals.sum()), time)

    @property
    def cells(self) -> int:
        return len(self.values)

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.cells

    @cached_property
    def centers(self) -> np.ndarray:
        return -self.half_width + self.h * (np.arange(self.cells) + 0.5)

    @cached_property
    def edges(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.cells + 1)

    @property
    def faces(self) -> np.ndarray:
        """Interior cell interfaces."""
        return self.edges[1:-1]

    @property
    def mass(self) -> float:
        return float(self.h * np.sum(self.values))

    @property
    def boundary_mass(self) -> float:
        return float(self.h * (abs(self.values[0]) + abs(self.values[-1])))

    def same_grid(self, other: "GridDensity") -> bool:
        return self.cells == other.cells and abs(self.half_width - other.half_width) <= 1e-12 * self.half_width

    def with_values(self, values, time=None) -> "GridDensity":
        return GridDensity(self.half_width, values, self.time if time is None else time)

    def validate(self):
        if np.min(self.values) < 0:
            raise InvalidParameterError(f"negative density value {np.min(self.values):.3e}")
        if abs(self.mass - 1.0) > MASS_TOL:
            raise InvalidParameterError(f"density has mass {self.mass:.12f}, expected 1")
        if self.boundary_mass > BOUNDARY_TOL:
            raise TruncationError(
                f"boundary cells carry mass {self.boundary_mass:.3e} > {BOUNDARY_TOL:.0e}; enlarge the domain"
            )
        return self

    def cdf_edges(self) -> np.ndarray:
        masses = self.h * np.clip(self.values, 0.0, None)
        c = np.concatenate([[0.0], np.cumsum(masses)])
        return c / c[-1]

    def cdf(self, x):
        return np.interp(x, self.edges, self.cdf_edges())

    def ppf(self, u):
        c = self.cdf_edges()
        u = np.asarray(u, dtype=float)
        j = np.clip(np.searchsorted(c, u, side="right") - 1, 0, self.cells - 1)
        width = c[j + 1] - c[j]
        frac = np.where(width > 0, (u - c[j]) / np.where(width > 0, width, 1.0), 0.0)
        return self.edges[j] + self.h * frac

    def pdf(self, x):
        """Piecewise-constant density; zero outside the domain."""
        x = np.asarray(x, dtype=float)
        j = np.floor((x + self.half_width) / self.h).astype(int)
        inside = (j >= 0) & (j < self.cells)
        return np.where(inside, self.values[np.clip(j, 0, self.cells - 1)], 0.0)

    def sample(self, n, rng):
        return self.ppf(rng.random(n))[:, None]


def _lags(kernel: Kernel, order: int, offset: float, h: float, n_targets: int, n_sources: int):
    k = np.arange(-(n_sources - 1), n_targets)
    return kernel.derivative_1d(offset + k * h, order)


@dataclass
class GridConvolver:
    """Discrete convolutions ``sum_j h g(x_i - y_j) f_j`` from cell centres ``y`` to targets ``x``.

    ``g`` is the kernel or one of its derivatives. Targets are the cell
    centres or the interior faces. ``method`` is ``"direct"`` (dense Toeplitz
    matrices, O(M^2) per product) or ``"fft"``; ``"auto"`` picks direct up to
    2048 cells.
    """

    kernel: Kernel
    half_width: float
    cells: int
    targets: str = "centers"
    method: str = "auto"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kernel.dimension != 1:
            raise InvalidParameterError("grid convolutions need a one-dimensional kernel")
        if self.targets not in ("centers", "faces"):
            raise InvalidParameterError(f"unknown target set {self.targets!r}")
        if self.method == "auto":
            self.method = "direct" if self.cells <= 2048 else "fft"
        if self.method not in ("direct", "fft"):
            raise InvalidParameterError(f"unknown convolution method {self.method!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.cells

    @property
    def n_targets(self) -> int:
        return self.cells if self.targets == "centers" else self.cells - 1

    @property
    def offset(self) -> float:
        # x_0 - y_0: first face sits half a cell right of the first centre
        return 0.0 if self.targets == "centers" else 0.5 * self.h

    def _lag_vector(self, order):
        key = ("lags", order)
        if key not in self._cache:
            self._cache[key] = self.h * _lags(self.kernel, order, self.offset, self.h, self.n_targets, self.cells)
        return self._cache[key]

    def matrix(self, order: int) -> np.ndarray:
        key = ("matrix", order)
        if key not in self._cache:
            lag = self._lag_vector(order)
            m = self.cells
            self._cache[key] = toeplitz(lag[m - 1 : m - 1 + self.n_targets], lag[m - 1 :: -1])
        return self._cache[key]

    def apply(self, order: int, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.method == "direct":
            return self.matrix(order) @ f
        lag = self._lag_vector(order)
        m = self.cells
        return fftconvolve(lag, f)[m - 1 : m - 1 + self.n_targets]


class GridOperators:
    """Cached convolvers for one grid, kernel and potential."""

    def __init__(self, kernel: Kernel, potential, half_width: float, cells: int, method: str = "auto"):
        self.kernel = kernel
        self.potential = potential
        self.half_width = half_width
        self.cells = cells
        self.centers = GridConvolver(kernel, half_width, cells, "centers", method)
        self.faces = GridConvolver(kernel, half_width, cells, "faces", method)
        self._half = None
        h = 2.0 * half_width / cells
        x = -half_width + h * (np.arange(cells) + 0.5)
        self.grad_v = potential.gradient(x)[:, 0]
        self.v = potential.value(x)

    @classmethod
    def for_grid(cls, rho: GridDensity, kernel, potential, method="auto"):
        return cls(kernel, potential, rho.half_width, rho.cells, method)

    def matches(self, rho: GridDensity) -> bool:
        return self.cells == rho.cells and abs(self.half_width - rho.half_width) <= 1e-12 * self.half_width

    @property
    def half(self) -> GridConvolver:
        if self._half is None:
            from ..kernels import half_factor

            self._half = GridConvolver(half_factor(self.kernel), self.half_width, self.cells, "centers", self.centers.method)
        return self._half

    def velocity(self, values, at="faces"):
        """U[rho] = -(K' * rho) - (K * (V' rho)) at faces or centres."""
        conv = self.faces if at == "faces" else self.centers
        return -conv.apply(1, values) - conv.apply(0, self.grad_v * values)

    def divergence(self, values, at="centers"):
        conv = self.faces if at == "faces" else self.centers
        return -conv.apply(2, values) - conv.apply(1, self.grad_v * values)

    def mv_velocity(self, values):
        """McKean-Vlasov field -(K' * rho) - V' at the centres."""
        return -self.centers.apply(1, values) - self.grad_v

    def half_residual(self, values):
        """K_half * (rho' + V' rho), with the derivative moved onto K_half."""
        return self.half.apply(1, values) + self.half.apply(0, self.grad_v * values)

