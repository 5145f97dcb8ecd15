"""Initial-condition families: analytic pdf/cdf/ppf plus particle placement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InvalidParameterError


@dataclass(frozen=True)
class NormalMixture:
    """Finite mixture of (isotropic) normals; a single component is the common case."""

    weights: tuple
    means: tuple
    stds: tuple
    dimension: int = 1

    def __post_init__(self):
        if not (len(self.weights) == len(self.means) == len(self.stds) >= 1):
            raise InvalidParameterError("mixture weights, means and stds must have equal positive length")
        if min(self.weights) <= 0 or abs(sum(self.weights) - 1.0) > 1e-12:
            raise InvalidParameterError("mixture weights must be positive and sum to 1")
        if min(self.stds) <= 0:
            raise InvalidParameterError("mixture standard deviations must be positive")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.dimension > 1:
            out = 0.0
            for w, m, s in zip(self.weights, self.means, self.stds):
                z = np.sum((x - np.asarray(m)) ** 2, axis=-1) / s**2
                out = out + w * np.exp(-0.5 * z) / (2 * np.pi * s**2) ** (self.dimension / 2)
            return out
        return sum(w * stats.norm.pdf(x, m, s) for w, m, s in zip(self.weights, self.means, self.stds))

    def cdf(self, x):
        return sum(w * stats.norm.cdf(x, m, s) for w, m, s in zip(self.weights, self.means, self.stds))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if len(self.weights) == 1:
            return stats.norm.ppf(u, self.means[0], self.stds[0])
        # vectorised bisection on the monotone mixture CDF
        lo = np.full(u.shape, min(m - 40 * s for m, s in zip(self.means, self.stds)))
        hi = np.full(u.shape, max(m + 40 * s for m, s in zip(self.means, self.stds)))
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < 1e-15 * max(1.0, np.max(np.abs(mid))):
                break
        return 0.5 * (lo + hi)

    def sample(self, n: int, rng: np.random.Generator):
        comp = rng.choice(len(self.weights), size=n, p=np.asarray(self.weights))
        means = np.asarray(self.means, dtype=float).reshape(len(self.weights), -1)
        if means.shape[1] == 1 and self.dimension > 1:
            means = np.repeat(means, self.dimension, axis=1)
        stds = np.asarray(self.stds, dtype=float)[comp][:, None]
        return means[comp] + stds * rng.standard_normal((n, self.dimension))


def normal(mean: float = 0.0, std: float = 1.0, dimension: int = 1) -> NormalMixture:
    return NormalMixture((1.0,), (mean,), (std,), dimension)


def quantile_levels(n: int) -> np.ndarray:
    """Equal-mass stratification levels (k + 1/2) / n."""
    return (np.arange(n) + 0.5) / n


def quantile_positions(density, n: int) -> np.ndarray:
    """Deterministic 1-D placement at the inverse-CDF midpoints, shape (n, 1)."""
    return np.asarray(density.ppf(quantile_levels(n)), dtype=float)[:, None]


def sample_positions(density, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.asarray(density.sample(n, rng), dtype=float).reshape(n, -1)
