import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from steinflow.errors import InvalidParameterError, TruncationError
from steinflow.potentials import make_potential, potential_eval, target_density, verify_assumptions


def test_quadratic_closed_form():
    V = make_potential("quadratic", A=np.eye(1))
    v, g, h = potential_eval(V, 1.5)
    assert (v, g[0], h[0, 0]) == (1.125, 1.5, 1.0)
    V2 = make_potential("quadratic", A=np.eye(2))
    v, g, _ = potential_eval(V2, [3.0, 4.0])
    assert v == 12.5 and np.array_equal(g, [3.0, 4.0])


def test_monomial_closed_form():
    V = make_potential("monomial", m=1.0, p=4)
    v, g, _ = potential_eval(V, 1.0)
    assert v == 1.0 and g[0] == 4.0
    assert V.q == pytest.approx(4 / 3)
    assert V.q_conjugate == 4


def test_double_well_closed_form():
    V = make_potential("double_well", a=1.0, b=1.0)
    assert potential_eval(V, 0.0)[0] == 1.0
    for x in (-1.0, 1.0):
        v, g, _ = potential_eval(V, x)
        assert v == 0.0 and g[0] == 0.0
    assert potential_eval(V, 0.0)[2][0, 0] == -4.0


@pytest.mark.parametrize(
    "family,params",
    [
        ("monomial", {"p": 3}),
        ("monomial", {"p": 4, "m": -1.0}),
        ("quadratic", {"A": [[1.0, 0.0], [0.0, -1.0]]}),
        ("quadratic", {"A": [[1.0, 0.5], [0.0, 1.0]]}),
        ("double_well", {"a": 0.0}),
        ("cubic", {}),
    ],
)
def test_invalid_parameters(family, params):
    with pytest.raises(InvalidParameterError):
        make_potential(family, **params)


def test_target_normal():
    T = target_density(make_potential("quadratic", A=np.eye(1)), (-10, 10), 2000)
    assert T.log_normalizer == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-12)
    assert np.max(T.values) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-4)
    assert T.grid.mass == pytest.approx(1.0, abs=1e-10)


def _central_residual(cells):
    V = make_potential("quadratic", A=np.eye(1))
    T = target_density(V, (-10, 10), cells)
    h = 20 / cells
    d = (T.values[2:] - T.values[:-2]) / (2 * h)
    return d + V.gradient(T.centers[1:-1])[:, 0] * T.values[1:-1], T.centers[1:-1], h


def test_target_stationarity_matches_truncation_error():
    # the central difference of exact e^{-V}/Z differs from rho' by h^2/6 times the
    # third derivative, plus O(h^4)
    resid, x, h = _central_residual(2000)
    phi = np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)
    third = -(x**3 - 3 * x) * phi
    assert np.max(np.abs(resid - h * h / 6 * third)) < 1e-9
    coarse, _, _ = _central_residual(1000)
    assert np.max(np.abs(coarse)) / np.max(np.abs(resid)) == pytest.approx(4.0, rel=1e-3)


@pytest.mark.xfail(strict=True, reason="h^2/6 * max|third derivative| = 9.2e-6 at h = 0.01 exceeds 1e-6 for the exact density")
def test_target_stationarity_at_stated_tolerance():
    resid, _, _ = _central_residual(2000)
    assert np.max(np.abs(resid)) < 1e-6


def test_double_well_symmetric():
    T = target_density(make_potential("double_well", a=1.0, b=1.0), (-6, 6), 1200)
    assert np.max(np.abs(T.values - T.values[::-1])) < 1e-12
    assert T.values[600] < T.values[500]  # x = 0 lies below the mode at x = -1


def test_truncation_error():
    with pytest.raises(TruncationError):
        target_density(make_potential("quadratic", A=np.eye(1)), (-3, 3), 200)


def test_verify_assumptions():
    assert not verify_assumptions(make_potential("quadratic", A=np.eye(1))).violated
    rep = verify_assumptions(make_potential("monomial", p=4))
    assert not rep.violated and rep.q == pytest.approx(4 / 3)
    assert math.isfinite(rep.growth_sup)

    class ExpGrowth:
        dimension = 1
        q = 2.0

        def value(self, x):
            return np.exp(np.sum(np.asarray(x) ** 2, axis=-1))

        def gradient(self, x):
            x = np.asarray(x)
            return 2 * x * self.value(x)[..., None]

        def hessian(self, x):
            x = np.asarray(x)
            return ((2 + 4 * x * x) * self.value(x)[..., None])[..., None]

    assert verify_assumptions(ExpGrowth(), sample_radius=5.0).violated


FAMILIES = [
    make_potential("quadratic", A=np.array([[2.0, 0.3], [0.3, 1.0]])),
    make_potential("monomial", dimension=2, m=0.7, p=4),
    make_potential("monomial", dimension=1, m=1.3, p=6),
    make_potential("double_well", a=0.5, b=1.2),
]


@pytest.mark.parametrize("V", FAMILIES, ids=lambda V: f"{V.family}{V.dimension}")
def test_finite_differences(V):
    rng = np.random.default_rng(3)
    x = rng.uniform(-2, 2, (100, V.dimension))
    step = 1e-5
    eye = np.eye(V.dimension)
    fd_g = np.stack([(V.value(x + step * e) - V.value(x - step * e)) / (2 * step) for e in eye], -1)
    fd_h = np.stack([(V.gradient(x + step * e) - V.gradient(x - step * e)) / (2 * step) for e in eye], -1)
    g, h = V.gradient(x), V.hessian(x)
    assert np.max(np.abs(fd_g - g) / np.maximum(np.abs(g), 1.0)) < 1e-6
    assert np.max(np.abs(fd_h - h) / np.maximum(np.abs(h), 1.0)) < 1e-6


def test_critical_points_exact():
    assert np.all(FAMILIES[0].gradient(np.zeros(2)) == 0)
    assert np.all(FAMILIES[1].gradient(np.zeros(2)) == 0)
    assert FAMILIES[3].gradient(np.array([1.2]))[0] == 0.0


@given(st.floats(-20, 20))
def test_even_and_nonnegative(x):
    for V in (FAMILIES[2], FAMILIES[3], make_potential("quadratic", A=np.eye(1))):
        assert V.value(x) >= 0
        assert V.value(x) == V.value(-x)
        assert V.gradient(x)[0] == -V.gradient(-x)[0]


@given(st.floats(-50, 50))
def test_growth_constant_holds(x):
    for V in (FAMILIES[2], FAMILIES[3], make_potential("quadratic", A=np.eye(1) * 3.0)):
        g = abs(V.gradient(x)[0])
        assert g**V.q <= V.growth_constant() * (1 + V.value(x)) * (1 + 1e-12)
