import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from steinflow.errors import InvalidParameterError, NumericalBlowupError
from steinflow.kernels import gram_matrix, make_gaussian_kernel, psd_check
from steinflow.particles import (
    IntegratorSpec,
    ParticleState,
    h_n,
    hn_growth_bound,
    integrate,
    interaction_energy,
    ksd_dissipation_check,
    ksd_squared,
    mckean_vlasov_velocity,
    potential_quadratic_form,
    step,
    svgd_velocity,
    ula_step,
    velocity_function,
)
from steinflow.potentials import make_potential

from conftest import FixedGradient

K2 = make_gaussian_kernel(2.0)
VQ = make_potential("quadratic", A=np.eye(1))
K0 = 0.28209479177387814

points = arrays(float, st.integers(1, 24), elements=st.floats(-6, 6))


def test_single_particle_velocities():
    assert svgd_velocity(ParticleState([1.0]), K2, VQ)[0, 0] == pytest.approx(-K0, rel=1e-14)
    assert mckean_vlasov_velocity(ParticleState([1.0]), K2, VQ)[0, 0] == pytest.approx(-1.0, rel=1e-14)
    assert svgd_velocity(ParticleState([0.0]), K2, VQ)[0, 0] == 0.0
    assert mckean_vlasov_velocity(ParticleState([0.0]), K2, VQ)[0, 0] == 0.0


def test_dimension_mismatch():
    with pytest.raises(InvalidParameterError):
        svgd_velocity(ParticleState(np.zeros((3, 2))), K2, VQ)
    with pytest.raises(InvalidParameterError):
        mckean_vlasov_velocity(ParticleState(np.zeros((3, 2))), K2, VQ)


def _dense_svgd(x, k, V):
    z = x[:, None, :] - x[None, :, :]
    kv = k.value(z)
    return -(k.gradient(z).sum(1) + (kv[..., None] * V.gradient(x)[None]).sum(1)) / len(x)


@given(arrays(float, (9, 2), elements=st.floats(-4, 4)))
def test_velocity_matches_dense_sum(x):
    k = make_gaussian_kernel(1.5, 2)
    V = make_potential("quadratic", A=np.array([[1.0, 0.2], [0.2, 2.0]]))
    assert np.allclose(svgd_velocity(x, k, V), _dense_svgd(x, k, V), atol=1e-14, rtol=1e-12)


@given(points, st.integers(0, 2**32 - 1))
def test_permutation_equivariance(x, seed):
    perm = np.random.default_rng(seed).permutation(len(x))
    v = svgd_velocity(x[:, None], K2, VQ)
    vp = svgd_velocity(x[perm][:, None], K2, VQ)
    assert np.allclose(vp, v[perm], atol=1e-15, rtol=1e-12)


@given(points, st.floats(-5, 5))
def test_translation_invariance_without_potential(x, c):
    V0 = FixedGradient()
    v = svgd_velocity(x[:, None], K2, V0)
    vs = svgd_velocity(x[:, None] + c, K2, V0)
    assert np.allclose(v, vs, atol=1e-13)


@given(arrays(float, st.integers(1, 12), elements=st.floats(0.01, 5)))
def test_antisymmetric_velocities(a):
    x = np.concatenate([-a, a[::-1]])[:, None]
    for fn in (svgd_velocity, mckean_vlasov_velocity):
        v = fn(x, K2, VQ)
        assert np.allclose(v, -v[::-1], atol=1e-15)


def test_antisymmetry_preserved_by_euler():
    x = np.linspace(-2, 2, 16)[:, None]
    traj = integrate(ParticleState(x), "svgd", K2, VQ, IntegratorSpec("explicit-euler", 0.01, 2.0), diagnostics=())
    y = traj.final.positions
    assert np.max(np.abs(y + y[::-1])) <= 4 * np.finfo(float).eps * np.max(np.abs(y))


def test_h_n_and_energy_examples():
    assert h_n(ParticleState([0.0, 0.0]), VQ) == 1.0
    assert h_n(ParticleState([0.0, 2.0]), VQ) == 2.0
    assert interaction_energy(ParticleState([0.0, 0.0]), K2) == pytest.approx(K0 / 2, rel=1e-14)
    assert interaction_energy(ParticleState([-50.0, 50.0]), K2) < 1e-300
    with pytest.warns(UserWarning):
        assert interaction_energy(ParticleState([1.0]), K2) == 0.0


@given(points)
def test_energy_gradient_is_repulsion(x):
    # repulsive part of the SVGD velocity equals -grad_{x_i} E with E = (1/N) sum_{i<j} K
    n = len(x)
    if n < 2:
        return
    V0 = FixedGradient()
    rep = svgd_velocity(x[:, None], K2, V0)[:, 0]
    step_ = 1e-5
    fd = np.array(
        [
            (interaction_energy(x + step_ * e, K2) - interaction_energy(x - step_ * e, K2)) / (2 * step_)
            for e in np.eye(n)
        ]
    )
    assert np.allclose(rep, -fd, atol=1e-8)


@given(points, st.integers(0, 2**32 - 1))
def test_h_n_permutation_invariant(x, seed):
    perm = np.random.default_rng(seed).permutation(len(x))
    assert h_n(x[perm], VQ) == pytest.approx(h_n(x, VQ), rel=1e-14)
    if len(x) > 1:
        assert interaction_energy(x[perm], K2) == pytest.approx(interaction_energy(x, K2), rel=1e-12, abs=1e-300)


def test_ula_variance_and_reproducibility():
    V0 = FixedGradient()
    st0 = ParticleState(np.zeros((100_000, 1)))
    out = ula_step(st0, V0, 0.01, np.random.default_rng(0))
    assert np.var(out.positions) == pytest.approx(0.02, rel=0.02)
    again = ula_step(st0, V0, 0.01, np.random.default_rng(0))
    assert np.array_equal(out.positions, again.positions)
    assert out.time == 0.01


def test_ula_stationary_variance():
    traj = integrate(
        ParticleState(np.zeros((10_000, 1))), "ula", K2, VQ, IntegratorSpec("explicit-euler", 0.01, 10.0),
        rng=np.random.default_rng(5), diagnostics=("H_N",), cadence=1000,
    )
    # discretised OU has stationary variance 1 / (1 - dt/2)
    assert np.var(traj.final.positions) == pytest.approx(1.0, rel=0.05)


def test_zero_steps_single_observer_call():
    calls = []
    integrate(ParticleState([0.5]), "svgd", K2, VQ, IntegratorSpec("rk4", 0.1, 1.0), observers=[lambda s, r: calls.append(s.time)], steps=0)
    assert calls == [0.0]


def test_zero_field_step():
    s = step(ParticleState([1.0, 2.0]), lambda x: np.zeros_like(x), IntegratorSpec("rk4", 0.1, 1.0))
    assert np.array_equal(s.positions[:, 0], [1.0, 2.0]) and s.time == pytest.approx(0.1)


def test_linear_ode_rk4():
    traj = integrate(ParticleState([1.0]), "svgd", K2, VQ, IntegratorSpec("rk4", 0.01, 1.0), diagnostics=())
    assert traj.final.positions[0, 0] == pytest.approx(math.exp(-K0), abs=1e-9)


def test_rk4_order():
    errs = []
    for dt in (0.2, 0.1, 0.05):
        traj = integrate(ParticleState([1.0]), "svgd", K2, VQ, IntegratorSpec("rk4", dt, 4.0), diagnostics=())
        errs.append(abs(traj.final.positions[0, 0] - math.exp(-4 * K0)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(16, rel=0.05)


def test_blowup_reports_index():
    with pytest.raises(NumericalBlowupError) as info:
        step(ParticleState([0.0, 1.0]), lambda x: np.array([[0.0], [np.inf]]), IntegratorSpec("explicit-euler", 0.1, 1.0))
    assert info.value.index == 1


def test_blowup_keeps_partial_trajectory():
    Vsteep = make_potential("monomial", p=8, m=1.0)
    with pytest.raises(NumericalBlowupError) as info:
        integrate(ParticleState([5.0, -5.0, 0.1]), "mckean-vlasov", K2, Vsteep, IntegratorSpec("explicit-euler", 0.5, 10.0))
    partial = info.value.diagnostics
    assert partial.failure is info.value and len(partial.times) >= 1


def test_observer_cadence_and_boundary():
    calls = []
    spec = IntegratorSpec("explicit-euler", 0.1, 0.1)
    traj = integrate(ParticleState([0.5]), "svgd", K2, VQ, spec, observers=[lambda s, r: calls.append(s.time)])
    assert calls == [0.0, pytest.approx(0.1)] and len(traj.times) == 2
    calls.clear()
    integrate(ParticleState([0.5]), "svgd", K2, VQ, IntegratorSpec("explicit-euler", 0.01, 1.0), observers=[lambda s, r: calls.append(s.time)], cadence=30)
    assert calls[0] == 0.0 and calls[-1] == pytest.approx(1.0) and len(calls) == 1 + 3 + 1


def test_integrator_spec_validation():
    with pytest.raises(InvalidParameterError):
        IntegratorSpec("leapfrog", 0.1, 1.0)
    with pytest.raises(InvalidParameterError):
        IntegratorSpec("rk4", 0.5, 0.1)
    assert IntegratorSpec("rk4", 0.01, 5.0).n_steps == 500
    with pytest.raises(InvalidParameterError):
        velocity_function("ula", K2, VQ)


def test_ksd_single_particle():
    assert ksd_squared(ParticleState([0.0]), K2, VQ) == pytest.approx(K0 / 2, rel=1e-14)


@given(arrays(float, st.integers(1, 20), elements=st.floats(-5, 5)))
def test_potential_quadratic_form_nonnegative(x):
    val, scale = potential_quadratic_form(x[:, None], K2, VQ)
    assert val >= -1e-10 * max(scale, 1e-300)


@given(st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_quadratic_form_probes_match_gram(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-3, 3, (n, 1))
    G = gram_matrix(K2, x)
    for i in range(n):
        e = np.zeros((n, 1))
        e[i] = 1.0
        val, _ = potential_quadratic_form(x, K2, FixedGradient(e))
        assert val * n * n == pytest.approx(G[i, i], rel=1e-12)
    assert psd_check(G)


def test_dissipation_check_along_run():
    x = np.random.default_rng(2).normal(1.0, 1.0, (40, 1))
    traj = integrate(ParticleState(x), "svgd", K2, VQ, IntegratorSpec("explicit-euler", 0.01, 1.0), record_positions=True, cadence=10)
    rep = ksd_dissipation_check(traj, K2, VQ)
    assert rep.passed and rep.minimum >= 0
    assert "PASS" in rep.to_text()


def test_exponential_bound_random_runs():
    c = hn_growth_bound(K2, VQ)
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(2, 129))
        x = rng.normal(rng.uniform(-3, 3), rng.uniform(0.1, 2.0), (n, 1))
        traj = integrate(ParticleState(x), "svgd", K2, VQ, IntegratorSpec("explicit-euler", 0.01, 5.0), diagnostics=("H_N",))
        h = traj.series("H_N")
        t = np.asarray(traj.times)
        assert np.all(np.log(h) - np.log(h[0]) <= c * t + 1e-12)
        assert np.all(np.diff(h) <= c * np.diff(t) * h[:-1])
