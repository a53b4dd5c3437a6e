import math

import numpy as np
import pytest

from mvsde.basis import (
    PHI_UNIFORM_BOUND,
    HermiteBasis,
    QuadratureRule,
    gauss_hermite,
    hermite_normalized,
    hermite_normalized_table,
    phi,
    phi_bounds,
    phi_table,
)

SQRT_PI = math.sqrt(math.pi)


def hermite_monomial_coefficients(n):
    """Physicists' Hermite coefficients by the integer recurrence
    H_{n+1} = 2x H_n - 2n H_{n-1}; exact for the small n used here."""
    coeffs = [np.array([1.0]), np.array([0.0, 2.0])]
    for m in range(1, n + 1):
        nxt = np.zeros(m + 2)
        nxt[1:] = 2.0 * coeffs[m]
        nxt[: m] -= 2.0 * m * coeffs[m - 1]
        coeffs.append(nxt)
    return coeffs[n]


def hermite_direct(n, x):
    """Independent evaluation: monomial expansion times the exact
    normalization (2^n n! sqrt(pi))^(-1/2)."""
    c_n = (2.0 ** n * math.factorial(n) * SQRT_PI) ** -0.5
    return c_n * np.polynomial.polynomial.polyval(x, hermite_monomial_coefficients(n))


def test_order_zero_is_constant():
    for x in (-3.0, 0.0, 0.17, 5.0):
        assert hermite_normalized(0, x) == pytest.approx(math.pi ** -0.25, rel=1e-14)


def test_order_one_against_direct_formula():
    # Hbar_1(x) = c_1 * 2x with c_1 = (2 sqrt(pi))^(-1/2)
    expected = (2.0 * SQRT_PI) ** -0.5 * 2.0 * 1.0
    assert expected == pytest.approx(math.sqrt(2.0) * math.pi ** -0.25, rel=1e-14)
    assert hermite_normalized(1, 1.0) == pytest.approx(expected, rel=1e-13)


def test_order_two_at_zero():
    # H_2(x) = 4x^2 - 2, so Hbar_2(0) = -2 (8 sqrt(pi))^(-1/2) = -pi^(-1/4)/sqrt(2)
    expected = -2.0 * (8.0 * SQRT_PI) ** -0.5
    assert expected == pytest.approx(-math.pi ** -0.25 / math.sqrt(2.0), rel=1e-14)
    assert hermite_normalized(2, 0.0) == pytest.approx(expected, rel=1e-13)
    assert hermite_direct(2, np.array([0.0]))[0] == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("n", range(11))
def test_recurrence_matches_monomial_expansion(n):
    x = np.linspace(-4.0, 4.0, 81)
    got = hermite_normalized(n, x)
    want = hermite_direct(n, x)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-9 * np.abs(want).max())


def test_phi_basics():
    assert phi(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-14)
    assert phi(1, 0.0) == 0.0
    # phi_k(x) = Hbar_k(x) exp(-x^2/2)
    x = 1.37
    assert phi(4, x) == pytest.approx(hermite_normalized(4, x) * math.exp(-x * x / 2), rel=1e-13)


def test_phi_parity_exact():
    x = np.linspace(0.1, 6.0, 40)
    table_pos = phi_table(20, x)
    table_neg = phi_table(20, -x)
    for k in range(21):
        sign = 1.0 if k % 2 == 0 else -1.0
        assert np.array_equal(table_neg[k], sign * table_pos[k])


def test_phi_uniform_bound():
    x = np.linspace(-10.0, 10.0, 4001)
    table = phi_table(20, x)
    assert np.max(np.abs(table)) <= PHI_UNIFORM_BOUND + 1e-6


def test_gauss_hermite_one_point():
    rule = gauss_hermite(1)
    assert rule.nodes.tolist() == [0.0]
    assert rule.weights[0] == pytest.approx(SQRT_PI, rel=1e-15)


def test_gauss_hermite_two_points():
    # roots of H_2 = 4x^2 - 2 are +-1/sqrt(2); weights sqrt(pi)/2 each
    rule = gauss_hermite(2)
    np.testing.assert_allclose(rule.nodes, [-2 ** -0.5, 2 ** -0.5], atol=1e-15)
    np.testing.assert_allclose(rule.weights, [SQRT_PI / 2] * 2, rtol=1e-14)
    # integral x^2 exp(-x^2) dx = sqrt(pi)/2
    assert float(rule.weights @ rule.nodes ** 2) == pytest.approx(SQRT_PI / 2, rel=1e-14)


@pytest.mark.parametrize("order", [3, 5, 20, 64])
def test_gauss_hermite_matches_numpy(order):
    rule = gauss_hermite(order)
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    np.testing.assert_allclose(rule.nodes, nodes, atol=5e-13)
    np.testing.assert_allclose(rule.weights, weights, rtol=5e-12, atol=1e-300)


def test_gauss_hermite_moments():
    # integral x^(2m) exp(-x^2) dx = Gamma(m + 1/2)
    rule = gauss_hermite(12)
    for m in range(12):
        want = math.gamma(m + 0.5)
        got = float(rule.weights @ rule.nodes ** (2 * m))
        assert got == pytest.approx(want, rel=1e-12)


def test_orthonormality_discretized():
    rule = gauss_hermite(64)
    table = hermite_normalized_table(20, rule.nodes)
    gram = (table * rule.weights) @ table.T
    assert np.max(np.abs(gram - np.eye(21))) < 1e-10


def test_quadrature_invariants():
    rule = gauss_hermite(40)
    assert np.array_equal(rule.nodes, -rule.nodes[::-1])
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - SQRT_PI) <= 1e-12 * SQRT_PI


def test_quadrature_rule_validation():
    with pytest.raises(ValueError):
        QuadratureRule(np.array([0.0, 1.0]), np.array([1.0, 1.0]))  # asymmetric
    with pytest.raises(ValueError):
        QuadratureRule(np.array([-1.0, 1.0]), np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        gauss_hermite(0)


def test_basis_quadrature_invariant():
    basis = HermiteBasis(max_order=20)
    assert basis.quadrature_order == 42
    with pytest.raises(ValueError):
        HermiteBasis(max_order=20, quadrature_order=30)
    with pytest.raises(ValueError):
        HermiteBasis(max_order=-1)


def test_phi_bounds_diagnostics():
    bounds = phi_bounds(20)
    d0, l0 = bounds[0]
    assert d0 == pytest.approx(math.pi ** -0.25, abs=1e-6)
    # phi_0' = -x pi^(-1/4) exp(-x^2/2) has max pi^(-1/4) e^(-1/2) at |x| = 1
    assert l0 == pytest.approx(math.pi ** -0.25 * math.exp(-0.5), abs=1e-4)
    assert all(d <= PHI_UNIFORM_BOUND + 1e-6 for d, _ in bounds)
