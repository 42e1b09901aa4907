import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from turnpoint.errors import (
    DivergenceError,
    DomainError,
    GridCoverageError,
    OverflowReportError,
    SectorError,
    StructuralError,
)
from turnpoint.transforms import (
    FormalSeries,
    RayFunction,
    borel_identity_cauchy,
    borel_identity_irregular,
    borel_identity_monomial,
    classical_laplace,
    fractional_kernel,
    gamma_fn,
    jacobi_rule,
    mittag_leffler,
    mittag_leffler_bound_constant,
    mk_borel,
    mk_laplace,
    ray_grid,
    series_laplace,
)


def monomial_ray(n, kappa, direction=0.0, R=1.0, n_r=400):
    "tau^n / Gamma(n/kappa): the Borel image of T^n."
    return RayFunction.from_function(
        lambda tau: tau ** n / special.gamma(n / kappa), direction, ray_grid(R, n_r)
    )


def test_ray_grid():
    r = ray_grid(2.0, 10)
    assert r[0] == 0.0
    assert r[1] == pytest.approx(2e-4)
    assert r[-1] == pytest.approx(2.0)
    with pytest.raises(StructuralError):
        ray_grid(0.0, 10)


def test_ray_function_checks():
    with pytest.raises(StructuralError):
        RayFunction(0.0, [0.1, 0.2, 0.3], [0, 0, 0])
    with pytest.raises(StructuralError):
        RayFunction(0.0, [0.0, 0.2, 0.1], [0, 0, 0])
    with pytest.raises(StructuralError):
        RayFunction(0.0, [0.0, 0.1, 0.2], [0, 0])


@pytest.mark.parametrize("alpha, beta", [(0.0, 0.0), (1.0, 0.0), (-0.5, 2.0), (2.5, 1.0)])
def test_jacobi_rule_weights(alpha, beta):
    x, w = jacobi_rule(12, alpha, beta)
    assert np.all((x > 0) & (x < 1))
    assert w.sum() == pytest.approx(special.beta(alpha + 1, beta + 1))


@pytest.mark.parametrize("kappa, R", [(1, 60.0), (2, 10.0), (3, 5.0)])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_mk_laplace_of_power(kappa, R, n):
    w = RayFunction.from_function(lambda tau: tau ** n, 0.0, ray_grid(R, 400))
    assert mk_laplace(w, 1.0, kappa) == pytest.approx(special.gamma(n / kappa), rel=1e-6)


def test_mk_laplace_inverts_borel():
    s = FormalSeries([1.0, -0.5, 0.25])
    w = RayFunction.from_function(lambda tau: mk_borel(s, 2)(tau), 0.3, ray_grid(10.0, 400))
    T = 0.4 * np.exp(0.2j)
    assert mk_laplace(w, T, 2) == pytest.approx(s(T), rel=1e-6)


def test_mk_laplace_sector_condition():
    w = monomial_ray(1, 1, direction=0.0, R=60.0)
    with pytest.raises(SectorError):
        mk_laplace(w, 1j, 1)
    with pytest.raises(SectorError):
        mk_laplace(w, 0.0, 1)


def test_mk_laplace_needs_decay():
    w = monomial_ray(1, 1, direction=0.0, R=2.0)
    with pytest.raises(DivergenceError):
        mk_laplace(w, 1.0, 1)


@pytest.mark.parametrize("kappa", [1, 2, 3])
def test_series_laplace_of_borel(kappa):
    s = FormalSeries([1.0, 2.0 - 1j, 0.5, 0.0, 3.0])
    T = 0.3 + 0.1j
    assert series_laplace(mk_borel(s, kappa), T, kappa) == pytest.approx(s(T), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    coeffs=st.lists(st.floats(min_value=-10, max_value=10), min_size=1, max_size=8),
    kappa=st.integers(min_value=1, max_value=4),
)
def test_borel_of_irregular_derivative(coeffs, kappa):
    s = FormalSeries(coeffs)
    borel = mk_borel(s, kappa)
    shifted = mk_borel(s.irregular_derivative(kappa), kappa)
    for n in range(1, s.N + 1):
        assert shifted.coefficient(n + kappa) == pytest.approx(kappa * borel.coefficient(n), rel=1e-10, abs=1e-12)


def test_formal_series():
    s = FormalSeries.monomial(3, 2.0)
    assert s.coeffs == (0.0, 0.0, 2.0)
    assert s.coefficient(3) == 2.0
    assert s.coefficient(7) == 0.0
    assert s.times_monomial(2).coefficient(5) == 2.0
    assert s(0.5) == pytest.approx(0.25)
    with pytest.raises(StructuralError):
        FormalSeries.monomial(0)
    with pytest.raises(StructuralError):
        mk_borel(s, 0)


def test_borel_identity_irregular():
    w = monomial_ray(2, 1)
    image = borel_identity_irregular(w, 1)
    # T^2 d/dT T^2 = 2 T^3 has Borel image 2 tau^3 / Gamma(3)
    assert np.allclose(image.values, 2 * w.tau ** 3 / special.gamma(3.0))


@pytest.mark.parametrize("kappa", [1, 2])
@pytest.mark.parametrize("n, m", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_borel_identity_monomial(kappa, n, m):
    w = monomial_ray(n, kappa, direction=0.7)
    image = borel_identity_monomial(w, m, kappa)
    expected = w.tau ** (m + n) / special.gamma((m + n) / kappa)
    mask = w.r_grid > 0.1
    assert np.allclose(image.values[mask], expected[mask], rtol=1e-6, atol=0)


@pytest.mark.parametrize("kappa", [1, 2])
@pytest.mark.parametrize("n1, n2", [(1, 1), (1, 2), (2, 3)])
def test_borel_identity_cauchy(kappa, n1, n2):
    w1 = monomial_ray(n1, kappa, direction=-0.4)
    w2 = monomial_ray(n2, kappa, direction=-0.4)
    image = borel_identity_cauchy(w1, w2, kappa)
    expected = w1.tau ** (n1 + n2) / special.gamma((n1 + n2) / kappa)
    mask = w1.r_grid > 0.1
    assert np.allclose(image.values[mask], expected[mask], rtol=1e-6, atol=0)


@pytest.mark.parametrize("kappa, a", [(1, 0.5), (1, 2.0), (2, 1.0), (2, 1.5)])
def test_fractional_kernel_beta_identity(kappa, a):
    # tau / Gamma(1/kappa) goes to tau^(1 + kappa a) / Gamma(1/kappa + a)
    w = monomial_ray(1, kappa, direction=0.3, n_r=60)
    image = fractional_kernel(w.slope(), w.r_grid[1:], w.direction, a, 0, kappa)
    expected = w.tau[1:] ** (1 + kappa * a) / special.gamma(1 / kappa + a)
    assert np.allclose(image, expected, rtol=1e-10, atol=0)


def test_fractional_kernel_with_power_weight():
    # tau int_0^tau s w(s) ds/s = tau^3 / 2 for w = tau
    w = monomial_ray(1, 1, direction=-0.2, n_r=60)
    image = fractional_kernel(w.slope(), w.r_grid[1:], w.direction, 1.0, 1, 1)
    assert np.allclose(image, w.tau[1:] ** 3 / 2, rtol=1e-10, atol=0)


def test_borel_identity_cauchy_needs_shared_grid():
    with pytest.raises(StructuralError):
        borel_identity_cauchy(monomial_ray(1, 1), monomial_ray(1, 1, n_r=100), 1)


def test_slope_interpolant_coverage():
    w = monomial_ray(2, 1)
    slope = w.slope()
    assert complex(slope(0.5)) == pytest.approx(0.5)
    with pytest.raises(GridCoverageError):
        slope(1.5)


def test_classical_laplace():
    w = RayFunction.from_function(lambda tau: tau, 0.0, ray_grid(20.0, 400))
    assert classical_laplace(w, 5.0) == pytest.approx(1 / 25, rel=1e-8)
    with pytest.raises(SectorError):
        classical_laplace(w, -5.0)


def test_classical_laplace_growth():
    w = RayFunction.from_function(lambda tau: np.exp(3 * tau) - 1, 0.0, ray_grid(20.0, 400))
    with pytest.raises(DivergenceError):
        classical_laplace(w, 5.0)


def test_gamma_fn():
    assert gamma_fn(5.0) == pytest.approx(24.0)
    with pytest.raises(DomainError):
        gamma_fn(0.0)


@pytest.mark.parametrize("x", [0.0, 0.5, 2.0, 10.0])
def test_mittag_leffler_closed_forms(x):
    assert mittag_leffler(1.0, x) == pytest.approx(math.exp(x), rel=1e-12)
    assert mittag_leffler(2.0, x) == pytest.approx(math.cosh(math.sqrt(x)), rel=1e-12)


def test_mittag_leffler_errors():
    with pytest.raises(OverflowReportError) as excinfo:
        mittag_leffler(1.0, 800.0)
    assert excinfo.value.log_value == pytest.approx(800.0)
    with pytest.raises(DomainError):
        mittag_leffler(1.0, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.0, 1.0)


def test_mittag_leffler_bound_constant():
    # E_1(x) = e^x exactly
    assert mittag_leffler_bound_constant(1.0, [0.0, 1.0, 5.0]) == pytest.approx(1.0)
    # cosh(sqrt x) e^(-sqrt x) peaks at x = 0
    assert mittag_leffler_bound_constant(2.0, [0.0, 4.0, 9.0]) == pytest.approx(1.0)
