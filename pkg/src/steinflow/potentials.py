"""Confining potentials V and the target density e^{-V}/Z.

Three families ship, all even and smooth:

* ``quadratic``   V(x) = x.A.x / 2 with A symmetric positive definite
* ``monomial``    V(x) = m |x|^p with p even, p >= 2
* ``double_well`` V(x) = a (x^2 - b^2)^2, one-dimensional
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidParameterError, TruncationError

FAMILIES = ("quadratic", "monomial", "double_well")


@dataclass(frozen=True)
class Potential:
    family: str
    dimension: int
    params: dict = field(default_factory=dict)

    @property
    def growth_index(self) -> float:
        if self.family == "quadratic":
            return 2.0
        if self.family == "monomial":
            return float(self.params["p"])
        return 4.0

    @property
    def q(self) -> float:
        """Exponent in |grad V|^q <= C_V (1 + V)."""
        g = self.growth_index
        return g / (g - 1.0)

    @property
    def q_conjugate(self) -> float:
        """Conjugate index of ``q``; the natural Wasserstein order for stability.

        Since q = g / (g - 1) for growth index g, the conjugate is g itself.
        """
        return self.growth_index

    def value(self, x):
        x = self._points(x)
        if self.family == "quadratic":
            a = self.params["A"]
            return 0.5 * np.einsum("...i,ij,...j->...", x, a, x)
        if self.family == "monomial":
            r2 = np.sum(x * x, axis=-1)
            return self.params["m"] * r2 ** (self.params["p"] // 2)
        a, b = self.params["a"], self.params["b"]
        return a * (x[..., 0] ** 2 - b * b) ** 2

    def gradient(self, x):
        x = self._points(x)
        if self.family == "quadratic":
            return x @ self.params["A"].T
        if self.family == "monomial":
            m, p = self.params["m"], self.params["p"]
            r2 = np.sum(x * x, axis=-1, keepdims=True)
            return m * p * r2 ** ((p - 2) // 2) * x
        a, b = self.params["a"], self.params["b"]
        return 4.0 * a * x * (x * x - b * b)

    def hessian(self, x):
        x = self._points(x)
        d = self.dimension
        if self.family == "quadratic":
            return np.broadcast_to(self.params["A"], x.shape[:-1] + (d, d)).copy()
        if self.family == "monomial":
            m, p = self.params["m"], self.params["p"]
            r2 = np.sum(x * x, axis=-1)[..., None, None]
            outer = x[..., :, None] * x[..., None, :]
            h = m * p * r2 ** ((p - 2) // 2) * np.eye(d)
            if p >= 4:
                h = h + m * p * (p - 2) * r2 ** ((p - 4) // 2) * outer
            return h
        a, b = self.params["a"], self.params["b"]
        return (a * (12.0 * x * x - 4.0 * b * b))[..., None]

    def laplacian(self, x):
        return np.trace(self.hessian(x), axis1=-2, axis2=-1)

    def growth_constant(self) -> float:
        """Smallest C_V with |grad V|^q <= C_V (1 + V) everywhere."""
        if self.family == "quadratic":
            return 2.0 * float(np.max(np.linalg.eigvalsh(self.params["A"])))
        if self.family == "monomial":
            m, p = self.params["m"], self.params["p"]
            q = self.q
            return m ** (q - 1.0) * p**q
        a, b = self.params["a"], self.params["b"]
        xs = np.linspace(0.0, 50.0 * max(b, 1.0), 200_001)[:, None]
        ratio = np.abs(self.gradient(xs)[:, 0]) ** self.q / (1.0 + self.value(xs))
        return float(max(ratio.max(), (4.0 * a) ** self.q / a))

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dimension:
            raise InvalidParameterError(
                f"potential has dimension {self.dimension}, got points of shape {x.shape}"
            )
        return x


def make_potential(family: str, dimension: int | None = None, **params) -> Potential:
    """Build a potential, validating the family's parameter constraints.

    >>> make_potential("monomial", m=1.0, p=4).q
    1.3333333333333333
    """
    if family == "quadratic":
        a = params.get("A")
        if a is None:
            a = np.eye(dimension or 1)
        a = np.atleast_2d(np.asarray(a, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise InvalidParameterError(f"A must be square, got shape {a.shape}")
        if not np.allclose(a, a.T):
            raise InvalidParameterError("A must be symmetric")
        if np.min(np.linalg.eigvalsh(a)) <= 0:
            raise InvalidParameterError("A must be positive definite")
        if dimension is not None and dimension != a.shape[0]:
            raise InvalidParameterError(f"A has size {a.shape[0]} but dimension={dimension}")
        a.setflags(write=False)
        return Potential("quadratic", a.shape[0], {"A": a})
    if family == "monomial":
        m = float(params.get("m", 1.0))
        p = params.get("p", 2)
        if int(p) != p or p < 2 or int(p) % 2:
            raise InvalidParameterError(f"monomial exponent must be an even integer >= 2, got {p}")
        if m <= 0:
            raise InvalidParameterError(f"monomial coefficient must be positive, got {m}")
        return Potential("monomial", int(dimension or 1), {"m": m, "p": int(p)})
    if family == "double_well":
        a = float(params.get("a", 1.0))
        b = float(params.get("b", 1.0))
        if a <= 0 or b <= 0:
            raise InvalidParameterError(f"double-well coefficients must be positive, got a={a}, b={b}")
        if dimension not in (None, 1):
            raise InvalidParameterError("double-well potential is one-dimensional")
        return Potential("double_well", 1, {"a": a, "b": b})
    raise InvalidParameterError(f"unknown potential family {family!r}; known: {FAMILIES}")


def potential_eval(V: Potential, x):
    """Return ``(value, gradient, hessian)`` at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(V.value(x)), V.gradient(x), V.hessian(x)


@dataclass(frozen=True)
class TargetDensity:
    potential: Potential
    log_normalizer: float
    centers: np.ndarray | None = None
    values: np.ndarray | None = None
    domain: tuple | None = None
    tail_mass: float = 0.0

    def pdf(self, x):
        return np.exp(-self.potential.value(x) - self.log_normalizer)

    @property
    def log_values(self):
        """log of the grid values, computed from V so deep tails do not underflow."""
        if self.values is None:
            return None
        h = (self.domain[1] - self.domain[0]) / len(self.values)
        logv = -self.potential.value(self.centers)
        return logv - logsumexp(logv) - math.log(h)

    @property
    def grid(self):
        """The grid representation as a :class:`GridDensity` (1-D only)."""
        if self.values is None:
            return None
        from .meanfield.grid import GridDensity

        half = 0.5 * (self.domain[1] - self.domain[0])
        return GridDensity(half, self.values.copy())


def _tail_bound(V: Potential, L: float) -> float:
    # exp(-V) beyond L is dominated by exp(-V(L) - V'(L)(x - L)) for potentials
    # that are convex and increasing past L; all shipped families are.
    worst = 0.0
    for sign in (-1.0, 1.0):
        x = sign * L
        slope = abs(float(V.gradient(x)[..., 0]))
        vx = float(V.value(x))
        worst = max(worst, math.exp(-vx) / slope if slope > 0 else math.inf)
    return worst


def target_density(V: Potential, domain=(-10.0, 10.0), cells: int = 2000, tail_tol: float = 1e-12) -> TargetDensity:
    """Normaliser and (for d = 1) cell-centre samples of e^{-V}/Z on a symmetric box.

    Raises :class:`TruncationError` when the mass outside the box, bounded by the
    tangent-line tail estimate, exceeds ``tail_tol``.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise InvalidParameterError(f"empty domain {domain}")
    if V.dimension > 2:
        raise InvalidParameterError("target_density supports d <= 2")
    L = max(abs(lo), abs(hi))
    if V.dimension == 1:
        edges = np.linspace(lo, hi, cells + 1)
        neg_v = -V.value(edges)
        w = np.full(cells + 1, (hi - lo) / cells)
        w[[0, -1]] *= 0.5
        log_z = float(logsumexp(neg_v, b=w))
        tail = _tail_bound(V, L) * math.exp(-log_z)
        if tail > tail_tol:
            raise TruncationError(
                f"domain {domain} too small: estimated tail mass {tail:.3e} exceeds {tail_tol:.1e}"
            )
        h = (hi - lo) / cells
        centers = lo + h * (np.arange(cells) + 0.5)
        logv = -V.value(centers)
        values = np.exp(logv - logsumexp(logv) - math.log(h))
        return TargetDensity(V, log_z, centers, values, (lo, hi), tail)
    # two-dimensional: normaliser only, tensor trapezoid on the square
    nodes = np.linspace(lo, hi, cells + 1)
    xx, yy = np.meshgrid(nodes, nodes, indexing="ij")
    pts = np.stack([xx, yy], axis=-1)
    w1 = np.full(cells + 1, (hi - lo) / cells)
    w1[[0, -1]] *= 0.5
    w = np.outer(w1, w1)
    log_z = float(logsumexp(-V.value(pts), b=w))
    edge = np.concatenate([pts[0], pts[-1], pts[:, 0], pts[:, -1]])
    boundary = float(np.max(np.exp(-V.value(edge) - log_z)))
    if boundary * 4 * L > tail_tol:
        raise TruncationError(f"domain {domain} too small: boundary density {boundary:.3e}")
    return TargetDensity(V, log_z, None, None, (lo, hi), boundary * 4 * L)


@dataclass
class AssumptionReport:
    q: float
    growth_sup: float
    a3_sup: float
    shell_radii: np.ndarray
    growth_shells: np.ndarray
    a3_shells: np.ndarray
    violated: bool
    messages: list

    def to_text(self) -> str:
        lines = [
            "[assumptions]",
            f"q = {self.q:.6g}",
            f"sup |grad V|^q / (1 + V) = {self.growth_sup:.6g}",
            f"sup (1 + |x|)(|grad V| + |hess V|) / (1 + V) = {self.a3_sup:.6g}",
            f"violated = {str(self.violated).lower()}",
        ]
        lines += [f"warning: {m}" for m in self.messages]
        return "\n".join(lines)


def _shell_growing(shell_max: np.ndarray) -> bool:
    if not np.all(np.isfinite(shell_max)):
        return True
    tail = shell_max[-4:]
    return bool(np.all(np.diff(tail) > 0) and tail[-1] > 1.5 * tail[0])


def verify_assumptions(V, sample_radius: float = 100.0, samples: int = 4000, shells: int = 10, seed: int = 0) -> AssumptionReport:
    """Sample the growth conditions on V over a ball and flag growth along shells.

    ``V`` needs ``value``, ``gradient``, ``hessian``, ``q`` and ``dimension``;
    test stubs that are not :class:`Potential` instances work too.
    """
    if sample_radius <= 0 or samples < shells:
        raise InvalidParameterError("need a positive radius and at least one sample per shell")
    d = V.dimension
    rng = np.random.default_rng(seed)
    radii = np.linspace(0.0, sample_radius, samples)
    if d == 1:
        signs = np.where(np.arange(samples) % 2 == 0, 1.0, -1.0)
        pts = (radii * signs)[:, None]
    else:
        dirs = rng.standard_normal((samples, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = radii[:, None] * dirs
    with np.errstate(over="ignore", invalid="ignore"):
        v = np.asarray(V.value(pts), dtype=float)
        g = np.linalg.norm(np.asarray(V.gradient(pts), dtype=float), axis=-1)
        hess = np.asarray(V.hessian(pts), dtype=float)
        hn = np.array([np.linalg.norm(h, 2) if np.all(np.isfinite(h)) else np.inf for h in hess])
        growth = g**V.q / (1.0 + v)
        a3 = (1.0 + radii) * (g + hn) / (1.0 + v)
    growth = np.where(np.isfinite(growth), growth, np.inf)
    a3 = np.where(np.isfinite(a3), a3, np.inf)
    bins = np.array_split(np.arange(samples), shells)
    shell_r = np.array([radii[b].max() for b in bins])
    gs = np.array([growth[b].max() for b in bins])
    a3s = np.array([a3[b].max() for b in bins])
    msgs = []
    if _shell_growing(gs):
        msgs.append("|grad V|^q / (1 + V) grows along outer shells")
    if _shell_growing(a3s):
        msgs.append("(1 + |x|)(|grad V| + |hess V|) / (1 + V) grows along outer shells")
    return AssumptionReport(V.q, float(growth.max()), float(a3.max()), shell_r, gs, a3s, bool(msgs), msgs)
