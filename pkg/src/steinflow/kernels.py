"""Interaction kernels: symmetric positive-definite Gaussians and their derivatives.

Only the Gaussian family ships. ``K_s(x) = (2 pi s)^(-d/2) exp(-|x|^2 / (2 s))``;
``s = 2`` gives the canonical ``(4 pi)^(-d/2) exp(-|x|^2 / 4)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e

from .errors import InvalidParameterError, NotFactorizableError

FAMILIES = ("gaussian",)


@dataclass(frozen=True)
class Kernel:
    family: str
    variance: float
    dimension: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameterError(f"unknown kernel family {self.family!r}; known: {FAMILIES}")
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise InvalidParameterError(f"kernel variance must be positive, got {self.variance}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise InvalidParameterError(f"kernel dimension must be a positive integer, got {self.dimension}")

    @property
    def norm(self) -> float:
        """Normalising constant ``(2 pi s)^(-d/2)``, equal to K(0)."""
        return (2.0 * math.pi * self.variance) ** (-0.5 * self.dimension)

    # -- sup norms used by the a priori bounds --
    @property
    def sup(self) -> float:
        return self.norm

    @property
    def grad_sup(self) -> float:
        # |grad K| = r/s K(r), maximised at r = sqrt(s)
        return self.norm * math.exp(-0.5) / math.sqrt(self.variance)

    @property
    def hess_sup(self) -> float:
        # spectral norm of the Hessian is largest at the origin
        return self.norm / self.variance

    # -- vectorised evaluation; the last axis of x is the spatial one --
    def value(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        return self.norm * np.exp(-0.5 * r2 / self.variance)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return -(x / self.variance) * self.value(x)[..., None]

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        s = self.variance
        eye = np.eye(self.dimension)
        outer = x[..., :, None] * x[..., None, :]
        return (outer / s**2 - eye / s) * self.value(x)[..., None, None]

    def laplacian(self, x):
        x = np.asarray(x, dtype=float)
        s = self.variance
        r2 = np.sum(x * x, axis=-1)
        return (r2 / s**2 - self.dimension / s) * self.value(x)

    def derivative_1d(self, x, order: int):
        """n-th derivative of a one-dimensional kernel, for ``order <= 4``.

        Uses probabilists' Hermite polynomials:
        ``d^n/dx^n exp(-x^2/(2s)) = (-1)^n s^(-n/2) He_n(x/sqrt(s)) exp(-x^2/(2s))``.
        """
        if self.dimension != 1:
            raise InvalidParameterError("derivative_1d needs a one-dimensional kernel")
        if not 0 <= order <= 4:
            raise InvalidParameterError(f"derivative order must be in 0..4, got {order}")
        x = np.asarray(x, dtype=float)
        s = self.variance
        coef = np.zeros(order + 1)
        coef[order] = 1.0
        z = x / math.sqrt(s)
        return (-1) ** order * s ** (-0.5 * order) * hermite_e.hermeval(z, coef) * self.norm * np.exp(-0.5 * z * z)

    def fourier(self, xi):
        """Fourier transform ``int K(x) exp(-i xi.x) dx = exp(-s |xi|^2 / 2)``."""
        xi = np.asarray(xi, dtype=float)
        if self.dimension == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
            xi = xi[..., None]
        return np.exp(-0.5 * self.variance * np.sum(xi * xi, axis=-1))


def make_gaussian_kernel(variance: float, dimension: int = 1) -> Kernel:
    return Kernel("gaussian", float(variance), int(dimension))


def kernel_eval(k: Kernel, x):
    """Return ``(value, gradient, hessian, laplacian)`` of ``k`` at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (k.dimension,):
        raise InvalidParameterError(f"expected a point of shape ({k.dimension},), got {x.shape}")
    hess = k.hessian(x)
    return float(k.value(x)), k.gradient(x), hess, float(np.trace(hess))


def half_factor(k: Kernel) -> Kernel:
    """Convolution square root: ``K = K_half * K_half`` with positive Fourier transform."""
    if k.family != "gaussian":
        raise NotFactorizableError(f"no half factor known for family {k.family!r}")
    return Kernel("gaussian", k.variance / 2.0, k.dimension)


def gram_matrix(k: Kernel, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    diff = pts[:, None, :] - pts[None, :, :]
    g = k.value(diff)
    return 0.5 * (g + g.T)


def psd_check(g, tol: float = 1e-10) -> bool:
    """True iff the smallest eigenvalue is above ``-tol`` times the spectral radius."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got shape {g.shape}")
    scale = max(np.max(np.abs(g)), np.finfo(float).tiny)
    if np.max(np.abs(g - g.T)) > max(tol, 1e-14) * scale:
        raise InvalidParameterError("matrix is not symmetric within tolerance")
    eig = np.linalg.eigvalsh(0.5 * (g + g.T))
    radius = np.max(np.abs(eig))
    return bool(eig[0] >= -tol * radius)
