import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from steinflow.errors import InvalidParameterError, NotFactorizableError
from steinflow.kernels import Kernel, gram_matrix, half_factor, kernel_eval, make_gaussian_kernel, psd_check

K0_S2 = 0.28209479177387814  # (4 pi)^(-1/2)


def test_canonical_value_at_origin():
    k = make_gaussian_kernel(2.0)
    value, grad, hess, lap = kernel_eval(k, 0.0)
    assert value == pytest.approx(K0_S2, rel=1e-15)
    assert grad[0] == 0.0
    assert lap == pytest.approx(-0.14104739588693907, rel=1e-14)
    assert hess.shape == (1, 1)


def test_unit_variance_value():
    assert make_gaussian_kernel(1.0).value(np.zeros(1)) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_two_dimensional_laplacian_at_origin():
    k = make_gaussian_kernel(2.0, 2)
    value, _, hess, lap = kernel_eval(k, np.zeros(2))
    assert lap == pytest.approx(-value, rel=1e-14)
    assert np.allclose(hess, hess.T)


@pytest.mark.parametrize("s", [0.0, -1.0, float("nan")])
def test_invalid_variance(s):
    with pytest.raises(InvalidParameterError):
        make_gaussian_kernel(s)


def test_half_factor_variance_and_self_convolution():
    k = make_gaussian_kernel(2.0)
    kh = half_factor(k)
    assert kh.variance == 1.0
    # (K_half * K_half)(0) = int K_half(y)^2 dy by trapezoid quadrature
    y = np.linspace(-20, 20, 4001)
    assert np.trapezoid(kh.value(y[:, None]) ** 2, y) == pytest.approx(K0_S2, abs=1e-12)


def test_half_factor_grid_convolution():
    k = make_gaussian_kernel(2.0)
    kh = half_factor(k)
    h = 1e-2
    y = np.arange(-20, 20 + h / 2, h)
    f = kh.value(y[:, None])
    w = np.full(len(y), h)
    w[[0, -1]] *= 0.5
    conv = np.convolve(f * w, f, mode="same")
    assert np.max(np.abs(conv - k.value(y[:, None]))) < 1e-6


def test_half_factor_fourier():
    k = make_gaussian_kernel(2.0)
    xi = np.linspace(-10, 10, 201)
    assert np.max(np.abs(k.fourier(xi) - half_factor(k).fourier(xi) ** 2)) < 1e-10


def test_not_factorizable():
    k = Kernel("gaussian", 1.0, 1)
    object.__setattr__(k, "family", "matern")
    with pytest.raises(NotFactorizableError):
        half_factor(k)


def test_gram_examples():
    k = make_gaussian_kernel(2.0)
    assert np.allclose(gram_matrix(k, [0.3]), [[K0_S2]], rtol=1e-15)
    g = gram_matrix(k, [0.0, 0.0])
    assert np.allclose(g, K0_S2)
    assert np.allclose(np.linalg.eigvalsh(g), [0.0, 2 * K0_S2], atol=1e-15)
    pts = np.random.default_rng(1).uniform(-5, 5, 50)
    np.linalg.cholesky(gram_matrix(k, pts) + 1e-12 * np.eye(50))


def test_psd_check_examples():
    assert psd_check(np.eye(3))
    assert not psd_check(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(InvalidParameterError):
        psd_check(np.array([[1.0, 0.5], [0.0, 1.0]]))


@given(st.floats(-8, 8), st.floats(0.2, 5.0))
def test_symmetry_and_gradient_oddness(x, s):
    k = make_gaussian_kernel(s)
    assert k.value(np.array([x])) == k.value(np.array([-x]))
    assert k.gradient(np.array([x]))[0] == -k.gradient(np.array([-x]))[0]


@given(arrays(float, (3,), elements=st.floats(-4, 4)), st.floats(0.5, 4.0))
def test_derivatives_match_finite_differences(x, s):
    k = make_gaussian_kernel(s, 3)
    step = 1e-4
    eye = np.eye(3)
    fd_grad = np.array([(k.value(x + step * e) - k.value(x - step * e)) / (2 * step) for e in eye])
    fd_hess = np.array([(k.gradient(x + step * e) - k.gradient(x - step * e)) / (2 * step) for e in eye])
    scale_g = max(np.max(np.abs(k.gradient(x))), k.grad_sup * 1e-3)
    scale_h = max(np.max(np.abs(k.hessian(x))), k.hess_sup * 1e-3)
    assert np.max(np.abs(fd_grad - k.gradient(x))) <= 1e-6 * scale_g
    assert np.max(np.abs(fd_hess - k.hessian(x))) <= 1e-6 * scale_h


@given(st.floats(-6, 6), st.integers(0, 3))
def test_derivative_1d_chain(x, order):
    k = make_gaussian_kernel(2.0)
    step = 1e-4
    fd = (k.derivative_1d(x + step, order) - k.derivative_1d(x - step, order)) / (2 * step)
    assert abs(fd - k.derivative_1d(x, order + 1)) <= 1e-6 * max(abs(k.derivative_1d(x, order + 1)), 1e-3 * k.norm)


@given(st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_gram_matrices_are_psd(m, seed):
    pts = np.random.default_rng(seed).uniform(-5, 5, (m, 1))
    assert psd_check(gram_matrix(make_gaussian_kernel(2.0), pts), 1e-10)
