import math

import numpy as np
import pytest

from mvsde.basis import HermiteBasis, gauss_hermite, phi_table
from mvsde.model import (
    InitialLaw,
    KernelModel,
    assumption_diagnostics,
    gaussian_alpha_closed_form,
    gaussian_kernel_model,
    gaussian_projected_model,
    project_kernel,
)

BASIS = HermiteBasis(max_order=25)


def quadrature_alpha(n, y, order=96):
    """Independent oracle: integral Q(y - u) phi_n(u) du by Gauss-Hermite,
    rewriting the integrand against exp(-u^2)."""
    rule = gauss_hermite(order)
    u = rule.nodes
    integrand = np.exp(-0.5 * (y - u) ** 2) * phi_table(n, u)[n] * np.exp(u * u)
    return float(rule.weights @ integrand)


def constant_model(c, sigma=0.0):
    return KernelModel(
        drift_kernel=lambda x, y: c * np.ones_like(np.broadcast_arrays(x, y)[0]),
        diffusion_kernel=lambda x, y: sigma * np.ones_like(np.broadcast_arrays(x, y)[0]),
        initial=InitialLaw("point", 0.5),
        horizon=1.0,
        constant_diffusion=sigma,
    )


def test_project_constant_drift_kernel():
    # alpha_0(x) = c * integral phi_0 = c * pi^(-1/4) sqrt(2 pi), odd orders vanish
    pm = project_kernel(constant_model(2.5), BASIS, K=8)
    x = np.array([-1.0, 0.0, 2.0])
    a = pm.alpha_matrix(x)
    want = 2.5 * math.pi ** -0.25 * math.sqrt(2.0 * math.pi)
    np.testing.assert_allclose(a[0], want, rtol=1e-12)
    assert want == pytest.approx(2.5 * 1.8827925275534294, rel=1e-10)
    for k in (1, 3, 5, 7):
        assert np.max(np.abs(a[k])) < 1e-12


def test_project_constant_diffusion():
    pm = project_kernel(constant_model(0.0, sigma=0.3), BASIS, K=6)
    x = np.array([-2.0, 0.7])
    b = pm.beta_matrix(x)
    #独立 of x, and beta_1 = 0 (odd integrand)
    np.testing.assert_allclose(b[:, 0], b[:, 1], rtol=0, atol=1e-13)
    assert abs(b[1, 0]) < 1e-12


def test_closed_form_reference_values():
    assert gaussian_alpha_closed_form(0, 0.0) == pytest.approx(math.pi ** 0.25, rel=1e-14)
    assert gaussian_alpha_closed_form(1, 0.0) == 0.0
    # pi^(1/4) 2^(-1/2) e^(-1/4); cross-checked against the quadrature oracle
    direct = math.pi ** 0.25 * math.sqrt(0.5) * math.exp(-0.25)
    assert gaussian_alpha_closed_form(1, 1.0) == pytest.approx(direct, rel=1e-13)
    assert quadrature_alpha(1, 1.0) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 10, 15, 20])
def test_closed_form_vs_quadrature(n):
    for y in np.arange(-3.0, 3.05, 0.5):
        got = gaussian_alpha_closed_form(n, float(y))
        assert got == pytest.approx(quadrature_alpha(n, float(y)), abs=1e-10)


def test_closed_form_negative_argument_sign():
    # odd orders flip sign with y
    assert gaussian_alpha_closed_form(3, -2.0) == pytest.approx(
        -gaussian_alpha_closed_form(3, 2.0), rel=1e-14)
    assert gaussian_alpha_closed_form(4, -2.0) == pytest.approx(
        gaussian_alpha_closed_form(4, 2.0), rel=1e-14)


def test_recurrence_matrix_matches_closed_form():
    pm = gaussian_projected_model(25)
    y = np.linspace(-5.0, 5.0, 41)
    a = pm.alpha_matrix(y)
    for n in range(26):
        want = gaussian_alpha_closed_form(n, y)
        np.testing.assert_allclose(a[n], want, rtol=0, atol=1e-12 * max(1.0, np.abs(want).max()))


def test_projection_agreement_gaussian_kernel():
    model = gaussian_kernel_model()
    pm = project_kernel(model, BASIS, K=20)
    y = np.arange(-3.0, 3.05, 0.1)
    a = pm.alpha_matrix(y)
    for n in range(21):
        np.testing.assert_allclose(a[n], gaussian_alpha_closed_form(n, y),
                                   rtol=0, atol=1e-6)


def test_projection_linearity():
    m1 = constant_model(1.0)
    m2 = gaussian_kernel_model()
    combined = KernelModel(
        drift_kernel=lambda x, y: m1.drift_kernel(x, y) + m2.drift_kernel(x, y),
        diffusion_kernel=m1.diffusion_kernel,
        initial=m1.initial,
        horizon=1.0,
    )
    x = np.linspace(-2.0, 2.0, 9)
    a_sum = project_kernel(combined, BASIS, K=10).alpha_matrix(x)
    a_parts = project_kernel(m1, BASIS, K=10).alpha_matrix(x) \
        + project_kernel(m2, BASIS, K=10).alpha_matrix(x)
    np.testing.assert_allclose(a_sum, a_parts, rtol=1e-13, atol=1e-15)


def test_projection_parity_even_kernel():
    # kernel even in u: alpha_k vanishes for odd k
    model = KernelModel(
        drift_kernel=lambda x, y: np.exp(-(y ** 2)) * np.ones_like(np.broadcast_arrays(x, y)[0]),
        diffusion_kernel=lambda x, y: np.zeros_like(np.broadcast_arrays(x, y)[0]),
        initial=InitialLaw("point", 0.0),
        horizon=1.0,
        constant_diffusion=0.0,
    )
    a = project_kernel(model, BASIS, K=11).alpha_matrix(np.array([0.3]))
    for k in (1, 3, 5, 7, 9, 11):
        assert abs(a[k, 0]) < 1e-12


def test_project_kernel_rejects_bad_inputs():
    model = gaussian_kernel_model()
    with pytest.raises(ValueError):
        project_kernel(model, BASIS, K=26)
    bad = KernelModel(
        drift_kernel=lambda x, y: np.where(np.abs(y) > 3, np.ones_like(x * y), np.ones_like(x * y)),
        diffusion_kernel=lambda x, y: np.ones_like(x * y),
        initial=InitialLaw("point", 0.0),
        horizon=1.0,
    )
    # non-finite at probe time is caught by KernelModel itself
    with pytest.raises(ValueError):
        KernelModel(
            drift_kernel=lambda x, y: x / (y - y),
            diffusion_kernel=lambda x, y: np.ones_like(x * y),
            initial=InitialLaw("point", 0.0),
            horizon=1.0,
        )


def test_diagnostics_growth_and_trend():
    pm = gaussian_projected_model(20)
    grid = np.linspace(-5.0, 5.0, 201)
    report = assumption_diagnostics(pm, grid)
    growth = report.growth_alpha
    assert growth.shape == (21,)
    assert np.all(np.isfinite(growth))
    # decreasing trend: clearly summable tail
    assert growth[20] < 0.05 * growth[0]
    assert np.all(np.diff(growth[4:]) < 0)


def test_diagnostics_gamma_fit_on_synthetic_decay():
    pm = gaussian_projected_model(10)
    gamma = np.exp(-0.5 * np.arange(11))
    report = assumption_diagnostics(pm, np.linspace(-3, 3, 31), gamma=gamma)
    assert report.gamma_rate == pytest.approx(0.5, abs=1e-9)
    assert report.gamma_fit_r2 == pytest.approx(1.0, abs=1e-12)
    assert report.gamma_fit_points == 11


def test_initial_law_validation():
    with pytest.raises(ValueError):
        InitialLaw("gaussian", 0.0, 0.0)
    with pytest.raises(ValueError):
        InitialLaw("cauchy", 0.0)
