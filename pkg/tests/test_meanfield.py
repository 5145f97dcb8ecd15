import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steinflow.densities import normal
from steinflow.errors import HorizonTooLongError, InvalidParameterError, StepRejectedError, TruncationError
from steinflow.kernels import make_gaussian_kernel
from steinflow.meanfield.characteristics import (
    WeightedEnsemble,
    atom_ensemble,
    characteristic_solve,
    ensemble_to_grid,
    quadrature_ensemble,
)
from steinflow.meanfield.fv import fv_solve, fv_step
from steinflow.meanfield.grid import GridDensity, GridOperators
from steinflow.meanfield.picard import picard_flow_map
from steinflow.meanfield.velocity import grid_dissipation, norm_monitor, stationarity_residual, velocity_field
from steinflow.metrics import wasserstein_1d
from steinflow.particles import IntegratorSpec
from steinflow.potentials import make_potential, target_density

from conftest import FixedGradient

K2 = make_gaussian_kernel(2.0)
VQ = make_potential("quadratic", A=np.eye(1))
K0 = 0.28209479177387814


def _grid(mean=0.0, std=1.0, L=10.0, M=1000):
    return GridDensity.from_pdf(normal(mean, std).pdf, L, M)


def test_target_is_stationary_on_grid():
    T = target_density(VQ, (-10, 10), 2000)
    assert velocity_field(T.grid, K2, VQ).sup < 1e-13
    flux, half = stationarity_residual(T.grid, K2, VQ)
    assert flux < 1e-13 and half < 1e-13


def test_mckean_vlasov_target_is_not_stationary():
    T = target_density(VQ, (-10, 10), 1000)
    flux, _ = stationarity_residual(T.grid, K2, VQ, dynamics="mckean-vlasov")
    assert flux > 0.01


def test_shifted_density_has_positive_residuals():
    flux, half = stationarity_residual(_grid(0.5), K2, VQ)
    assert flux > 1e-3 and half > 1e-3


@given(st.floats(0.3, 2.5))
def test_velocity_odd_for_even_density(std):
    rho = _grid(0.0, std, M=400)
    u = velocity_field(rho, K2, VQ).velocity[:, 0]
    assert np.max(np.abs(u + u[::-1])) < 1e-13


def test_point_mass_velocity():
    x = np.linspace(-3, 3, 13)
    vf = velocity_field(atom_ensemble([0.0]), K2, VQ, at=x)
    assert np.allclose(vf.velocity[:, 0], -K2.gradient(x[:, None])[:, 0], atol=1e-16, rtol=1e-14)


def test_grid_and_ensemble_velocity_agree():
    rho = _grid(0.7, 0.8, M=1000)
    grid_u = velocity_field(rho, K2, VQ).velocity[:, 0]
    ens = WeightedEnsemble(rho.centers, rho.values * rho.h, np.zeros(rho.cells), rho.values)
    ens_u = velocity_field(ens, K2, VQ, at=rho.centers).velocity[:, 0]
    assert np.max(np.abs(grid_u - ens_u)) < 1e-12


def test_fft_matches_direct():
    rho = _grid(0.3, 1.2, M=1500)
    a = GridOperators.for_grid(rho, K2, VQ, "direct")
    b = GridOperators.for_grid(rho, K2, VQ, "fft")
    for at in ("faces", "centers"):
        assert np.max(np.abs(a.velocity(rho.values, at) - b.velocity(rho.values, at))) < 1e-12
    assert np.max(np.abs(a.divergence(rho.values) - b.divergence(rho.values))) < 1e-12


def test_operators_for_other_grid_rejected():
    with pytest.raises(InvalidParameterError):
        velocity_field(_grid(M=400), K2, VQ, operators=GridOperators(K2, VQ, 10.0, 500))


def test_target_stationary_under_fv_steps():
    T = target_density(VQ, (-10, 10), 1000)
    traj = fv_solve(T.grid, K2, VQ, 5.0, dt_max=1e-3, cadence=10**9, target=T)
    assert T.grid.h * np.sum(np.abs(traj.final.values - T.values)) < 5e-3


def test_zero_field_leaves_density_unchanged():
    from steinflow.meanfield.fv import _step_with

    rho = _grid(0.0, 1.3, M=300)
    assert np.array_equal(_step_with(rho, np.zeros(rho.cells - 1), 0.5).values, rho.values)


def test_mass_conserved_over_many_steps():
    rho = _grid(1.0, 0.7, M=200)
    m0 = rho.mass
    ops = GridOperators.for_grid(rho, K2, VQ)
    for _ in range(100_000):
        rho = fv_step(rho, K2, VQ, 0.01, ops)
    assert abs(rho.mass - m0) / m0 < 1e-10
    assert np.all(rho.values >= 0)


def test_cfl_rejection():
    rho = _grid(2.0, 0.5, M=400)
    with pytest.raises(StepRejectedError) as info:
        fv_step(rho, K2, VQ, 5.0)
    assert 0 < info.value.suggested_dt < 5.0
    fv_step(rho, K2, VQ, info.value.suggested_dt)


def test_truncation_detected():
    with pytest.raises(TruncationError):
        fv_solve(_grid(3.0, 1.0, L=6.0, M=300), K2, make_potential("quadratic", A=[[0.05]]), 0.5, dt_max=0.01)


def test_kl_decreases_every_step():
    traj = fv_solve(_grid(2.0, 0.6, M=500), K2, VQ, 3.0, record_kl_steps=True)
    assert traj.max_kl_increase <= 1e-14
    kl = traj.column("KL")
    assert kl[-1] < kl[0]
    assert np.all(traj.column("dissipation") >= 0)
    assert np.all(np.abs(traj.column("mass") - 1) < 1e-12)


def test_rows_land_on_checkpoints():
    traj = fv_solve(_grid(1.0, 1.0, M=300), K2, VQ, 1.0, checkpoints=[0.25, 0.5], cadence=10**9)
    assert list(traj.times) == [0.0, 0.25, 0.5, 1.0]
    assert set(traj.snapshots) == {0.25, 0.5, 1.0}


def test_norm_monitor():
    l1, w11 = norm_monitor(_grid(0.0, 1.0, L=12.0, M=2000), VQ)
    assert l1 == pytest.approx(1.5, abs=1e-10)
    assert w11 > l1


@given(st.floats(-2, 2), st.floats(0.3, 2.0), st.floats(0.1, 10.0))
@settings(max_examples=25)
def test_norm_monitor_homogeneous(mean, std, c):
    rho = _grid(mean, std, L=12.0, M=500)
    l1, w11 = norm_monitor(rho, VQ)
    cl1, cw11 = norm_monitor(rho.with_values(c * rho.values), VQ)
    assert cl1 == pytest.approx(c * l1, rel=1e-13) and cw11 == pytest.approx(c * w11, rel=1e-13)
    assert w11 >= l1


def test_single_characteristic_closed_form():
    nu = WeightedEnsemble([1.0], [1.0], [0.0], [1.0])
    out = characteristic_solve(nu, K2, VQ, 2.0, IntegratorSpec("rk4", 0.01, 2.0)).final
    assert out.points[0, 0] == pytest.approx(math.exp(-2 * K0), abs=1e-10)
    # div U at the atom differentiates only the evaluation point: -K''(0) = K(0) / s
    assert out.log_jacobians[0] == pytest.approx(2 * K0 / 2.0, abs=1e-12)


def test_target_quadrature_nearly_frozen():
    T = target_density(VQ, (-12, 12), 24000)
    nu = quadrature_ensemble(T.grid, 800)
    worst = [0.0]

    def obs(e):
        worst[0] = max(worst[0], float(np.max(np.abs(e.points - nu.points))))

    characteristic_solve(nu, K2, VQ, 5.0, IntegratorSpec("rk4", 0.01, 5.0), observers=[obs])
    assert worst[0] < 1e-3


def test_single_atom_without_potential_stays():
    out = characteristic_solve(atom_ensemble([0.7]), K2, FixedGradient(), 3.0).final
    assert out.points[0, 0] == 0.7


def test_jacobian_matches_flow_map_derivative():
    # trace two light points either side of x_k through the field of the ensemble
    nu = quadrature_ensemble(normal(1.0, 0.7), 200)
    k_idx, eps = 80, 1e-5
    x0 = nu.points[k_idx, 0]
    pts = np.concatenate([nu.points[:, 0], [x0 - eps, x0 + eps]])
    w = np.concatenate([nu.weights * (1 - 2e-14), [1e-14, 1e-14]])
    ens = WeightedEnsemble(pts, w, np.zeros(len(pts)), np.ones(len(pts)))
    out = characteristic_solve(ens, K2, VQ, 1.0, IntegratorSpec("rk4", 0.01, 1.0)).final
    fd = (out.points[-1, 0] - out.points[-2, 0]) / (2 * eps)
    assert fd == pytest.approx(math.exp(out.log_jacobians[k_idx]), rel=1e-4)


def test_reconstruction_conserves_mass_and_matches_ensemble():
    nu = quadrature_ensemble(normal(0.5, 0.8), 400)
    g = ensemble_to_grid(nu, 10.0, 1000)
    assert g.mass == pytest.approx(1.0, abs=1e-13)
    assert wasserstein_1d(g, _grid(0.5, 0.8)) < 1e-4


def test_picard_first_iterate_and_convergence():
    nu = quadrature_ensemble(normal(1.0, 0.7), 100)
    rep = picard_flow_map(nu, K2, VQ, 1.0, max_iters=1, mesh=20)
    u0 = velocity_field(nu, K2, VQ).velocity
    expected = nu.points[None] + rep.times[:, None, None] * u0[None]
    assert np.max(np.abs(rep.flow - expected)) < 1e-14

    rep = picard_flow_map(nu, K2, VQ, 1.0)
    assert rep.converged and rep.contraction_factor < 1
    ref = characteristic_solve(nu, K2, VQ, 1.0, IntegratorSpec("rk4", 0.005, 1.0)).final
    assert np.max(np.abs(rep.flow[-1] - ref.points)) < 1e-8
    assert np.max(np.abs(rep.ensemble(nu).log_jacobians - ref.log_jacobians)) < 1e-8


def test_picard_long_horizon_rejected():
    nu = quadrature_ensemble(normal(1.0, 0.7), 100)
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(HorizonTooLongError):
        picard_flow_map(nu, K2, make_potential("monomial", p=8, m=1.0), 20.0)


def test_grid_dissipation_matches_ensemble_ksd():
    from steinflow.metrics import ksd

    rho = _grid(0.8, 0.9, M=800)
    ops = GridOperators.for_grid(rho, K2, VQ)
    assert grid_dissipation(rho, ops) == pytest.approx(ksd(rho, K2, VQ), rel=1e-10)
