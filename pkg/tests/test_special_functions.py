import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lmg import DomainError
from lmg.special_functions import agm_sums, complete_elliptic_KE, digamma, jacobi_cn

# Frozen from tests/oracles.py (defining-integral quadrature and ODE integration).
KE_QUAD = {0.5: (1.8540746773013719, 1.3506438810476755), 0.9: (2.578092113348173, 1.1047747327040733)}
CN_ODE = {(1.0, 0.5): 0.5959765676721436, (2.5, 0.9): 0.02471497101090095}


def test_ke_at_zero():
    p = complete_elliptic_KE(0.0)
    assert p.K == pytest.approx(math.pi / 2, abs=1e-15)
    assert p.E == pytest.approx(math.pi / 2, abs=1e-15)


@pytest.mark.parametrize("m", sorted(KE_QUAD))
def test_ke_against_quadrature(m):
    p = complete_elliptic_KE(m)
    K, E = KE_QUAD[m]
    assert abs(p.K - K) <= 1e-12 * K
    assert abs(p.E - E) <= 1e-12 * E


def test_ke_matches_scipy_grid():
    from scipy.special import ellipe, ellipk

    for m in np.linspace(0, 0.999999, 57):
        p = complete_elliptic_KE(float(m))
        assert abs(p.K - ellipk(m)) <= 1e-12 * ellipk(m)
        assert abs(p.E - ellipe(m)) <= 1e-12 * ellipe(m)


def test_ke_near_one_asymptotics():
    m1 = 1e-8
    p = complete_elliptic_KE(1 - m1, m1)
    assert abs(p.K - 0.5 * math.log(16 / m1)) < 1e-6
    assert abs(p.E - 1) < 1e-6


@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_legendre_relation(m):
    a = complete_elliptic_KE(m, None)
    b = complete_elliptic_KE(1 - m, m)
    assert abs(a.E * b.K + b.E * a.K - a.K * b.K - math.pi / 2) < 1e-10
    assert a.K >= math.pi / 2 and a.E <= math.pi / 2 and a.K * a.E > 0


@pytest.mark.parametrize("m", [-0.1, 1.0, 1.5])
def test_ke_domain(m):
    with pytest.raises(DomainError):
        complete_elliptic_KE(m)


def test_agm_sums_small_m_keeps_precision():
    m = 1e-10
    K, sigma, tau = agm_sums(m)
    assert sigma / m == pytest.approx(0.5, rel=1e-9)
    # tau = m^2/16 + O(m^3)
    assert tau == pytest.approx(m * m / 16, rel=1e-6)


def test_cn_limits():
    u = np.linspace(-5, 5, 41)
    assert np.allclose(jacobi_cn(u, 0.0), np.cos(u), atol=1e-15)
    assert np.allclose(jacobi_cn(u, 1.0), 1 / np.cosh(u), atol=1e-15)


@pytest.mark.parametrize("u,m", sorted(CN_ODE))
def test_cn_against_ode(u, m):
    assert abs(float(jacobi_cn(u, m)) - CN_ODE[(u, m)]) < 1e-9


def test_cn_matches_scipy():
    from scipy.special import ellipj

    u = np.linspace(-10, 10, 101)
    for m in (0.01, 0.3, 0.5, 0.9, 0.999):
        assert np.abs(jacobi_cn(u, m) - ellipj(u, m)[1]).max() < 1e-12


@pytest.mark.parametrize("m", [1.5, 3.0])
def test_cn_reciprocal_modulus_branch_solves_ode(m):
    u = np.linspace(0, 4, 401)
    y = jacobi_cn(u, m)
    h = u[1] - u[0]
    ypp = (y[2:] - 2 * y[1:-1] + y[:-2]) / h**2
    rhs = -(1 - 2 * m) * y[1:-1] - 2 * m * y[1:-1] ** 3
    assert np.abs(ypp - rhs).max() < 1e-3


def test_cn_second_difference_property():
    # y'' = -(1 - 2m) y - 2m y^3 with a fourth-order central difference
    h = 1e-3
    for m in (0.1, 0.5, 0.9):
        u = np.linspace(0.3, 6.0, 23)
        y = lambda v: jacobi_cn(v, m)
        ypp = (-y(u + 2 * h) + 16 * y(u + h) - 30 * y(u) + 16 * y(u - h) - y(u - 2 * h)) / (12 * h * h)
        rhs = -(1 - 2 * m) * y(u) - 2 * m * y(u) ** 3
        assert np.abs(ypp - rhs).max() < 1e-6


@pytest.mark.parametrize("m", [0.1 * k for k in range(1, 10)])
def test_cn_quarter_period_zero_and_periodicity(m):
    K = complete_elliptic_KE(m).K
    assert abs(float(jacobi_cn(K, m))) < 1e-10
    u = np.linspace(0, 3, 7)
    assert np.allclose(jacobi_cn(u + 4 * K, m), jacobi_cn(u, m), atol=1e-12)
    assert np.all(np.abs(jacobi_cn(np.linspace(-20, 20, 200), m)) <= 1)


def test_digamma_values():
    assert digamma(2.0) - digamma(1.0) == pytest.approx(1.0, abs=1e-14)
    assert digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-14)


def test_digamma_recurrence_chain():
    # psi(1/2) = -euler_gamma - 2 ln 2, then ten recurrence steps
    value = -0.5772156649015329 - 2 * math.log(2)
    for k in range(10):
        value += 1 / (0.5 + k)
    assert digamma(10.5) == pytest.approx(value, abs=1e-13)


@given(st.floats(min_value=1e-3, max_value=1e6))
def test_digamma_recurrence(x):
    assert abs(digamma(x + 1) - digamma(x) - 1 / x) <= 1e-12 * max(1.0, 1 / x)


def test_digamma_matches_scipy():
    from scipy.special import psi

    for x in np.geomspace(1e-3, 1e8, 60):
        assert abs(digamma(float(x)) - psi(x)) <= 1e-13 * max(1.0, abs(psi(x)))


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_digamma_domain(x):
    with pytest.raises(DomainError):
        digamma(x)
