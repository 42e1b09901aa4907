import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from turnpoint.cli import RunConfig
from turnpoint.errors import (
    AdmissibilityError,
    DivergenceError,
    DomainError,
    NonConvergenceError,
    SectorError,
    StructuralError,
)
from turnpoint.inner import (
    FixedPointResult,
    InnerProblem,
    RayGrid2D,
    a_coeffs,
    apply_H,
    fixed_point_iteration,
    fnorm,
    forcing_direction,
    forcing_moments,
    forcing_psi,
    inner_extent,
    inner_pde_residual,
    inner_rational_residual,
    inner_solution,
    laplace_radius,
    root_free_span,
    solve_inner,
)
from turnpoint.model import eps_power, load_config
from turnpoint.transforms import ray_grid
from turnpoint.turning import sector_admissibility


def test_a_coeffs_second_order():
    # T^4 d^2 = (T^2 d)^2 - 2 T (T^2 d)
    assert a_coeffs(2, 1) == [Fraction(-2)]
    assert a_coeffs(1, 3) == []
    with pytest.raises(StructuralError):
        a_coeffs(0, 1)


@settings(max_examples=40, deadline=None)
@given(
    delta=st.integers(min_value=1, max_value=4),
    kappa=st.integers(min_value=1, max_value=3),
    n=st.integers(min_value=-12, max_value=12),
)
def test_a_coeffs_expand_the_derivative(delta, kappa, n):
    # both sides applied to T^n give a multiple of T^(n + delta kappa)
    def rising(count):
        return math.prod((Fraction(n + j * kappa) for j in range(count)), start=Fraction(1))

    falling = math.prod((Fraction(n - j) for j in range(delta)), start=Fraction(1))
    expansion = rising(delta) + sum(A * rising(p) for p, A in enumerate(a_coeffs(delta, kappa), start=1))
    assert falling == expansion


def test_ray_grid_2d_checks(example1):
    _, p = example1
    r = ray_grid(0.04, 10)
    with pytest.raises(StructuralError):
        RayGrid2D(0.0, r, 12.0, np.zeros((11, 4)))
    values = np.ones((11, 5))
    with pytest.raises(StructuralError):
        RayGrid2D(0.0, r, 12.0, values)
    grid = RayGrid2D.from_function(lambda tau, m: tau * np.exp(-np.abs(m)), 0.5, r, 12.0, 5, p)
    assert grid.values.shape == (11, 5)
    assert grid.n_m == 5
    assert grid.m[2] == 0.0
    assert grid.header()["kind"] == "inner"
    assert len(list(grid.rows())) == 55


def test_fnorm(example1):
    _, p = example1
    eps = 0.5
    r = ray_grid(0.04, 20)
    grid = RayGrid2D.from_function(lambda tau, m: tau * np.exp(-np.abs(m)), 0.0, r, 12.0, 25, p)
    value = fnorm(grid, eps)
    assert 0 < value < math.inf
    assert fnorm(grid.with_values(2 * grid.values), eps) == pytest.approx(2 * value)
    assert fnorm(grid.with_values(np.zeros_like(grid.values)), eps) == 0.0
    with pytest.raises(StructuralError):
        fnorm(RayGrid2D(0.0, r, 12.0, grid.values), eps)


def test_root_free_span(example1):
    spec, _ = example1
    # F2 = 1 + u/2 vanishes at -2, on the ray of angle pi
    assert root_free_span(spec.forcing) == (-math.pi, math.pi)
    assert forcing_direction(spec.forcing, 1.0) == 0.0
    assert forcing_direction(spec.forcing, 1j) == pytest.approx(-math.pi / 2)
    with pytest.raises(DomainError):
        forcing_direction(spec.forcing, 0.0)


def test_forcing_moments(example1):
    spec, _ = example1
    # int_0^inf e^(-u) / (1 + u/2) du = 2 e^2 E_1(2)
    I0 = 2 * math.exp(2) * special.exp1(2.0)
    moments = np.exp(forcing_moments(spec.forcing, 3))
    assert moments[0] == pytest.approx(I0, rel=1e-8)
    # u/(1 + u/2) = 2 - 2/(1 + u/2)
    assert moments[1] == pytest.approx(2 - 2 * I0, rel=1e-8)
    assert np.all(np.abs(moments.imag) < 1e-12)


def test_forcing_psi_vanishes_at_origin(example1, small_solver):
    spec, p = example1
    shape = RayGrid2D.zeros(math.pi / 2, ray_grid(p.rho, small_solver["n_r"]), 12.0, small_solver["n_m"], p)
    psi = forcing_psi(0.25, spec, p, shape)
    assert np.all(psi.values[0] == 0)
    assert np.all(np.isfinite(psi.values))
    assert np.any(psi.values[1:] != 0)


def test_fixed_point_iteration_contraction():
    values, iterations, ratios, norms = fixed_point_iteration(
        lambda x: 0.5 * x + 1.0, lambda x: float(np.max(np.abs(x))), np.zeros(3), 1e-12, 200
    )
    assert np.allclose(values, 2.0)
    assert ratios[0] == pytest.approx(0.5)
    assert norms[0] == 1.0
    assert iterations > 10


def test_fixed_point_iteration_constant_map():
    values, iterations, ratios, norms = fixed_point_iteration(
        lambda x: np.ones_like(x), lambda x: float(np.max(np.abs(x))), np.zeros(3), 1e-12, 10
    )
    assert iterations == 1
    assert np.all(values == 1.0)


def test_fixed_point_iteration_failures():
    def norm(x):
        return float(np.max(np.abs(x)))

    with pytest.raises(DivergenceError):
        fixed_point_iteration(lambda x: 2.0 * x + 1.0, norm, np.zeros(3), 1e-12, 200)
    with pytest.raises(NonConvergenceError):
        fixed_point_iteration(lambda x: 0.9 * x + 1.0, norm, np.zeros(3), 1e-12, 5)


def test_laplace_radius():
    assert laplace_radius(2.0, 1, 0.1) == pytest.approx(800.0)
    assert laplace_radius(1.0, 2, 0.1) == pytest.approx(20.0)
    assert laplace_radius(2.0, 1, 0.1, growth=0.03) == pytest.approx(2000.0)
    with pytest.raises(DomainError):
        laplace_radius(2.0, 1, 0.1, growth=0.05)


def test_inner_extent(example1):
    _, p = example1
    eps = 0.5
    # the weighted norm lets |w| grow like exp(nu r / eps^6)
    expected = 40.0 / (1.0 / 0.01 - p.nu / eps ** 6)
    assert inner_extent(0.01, 0.0, eps, p) == pytest.approx(expected)
    assert inner_extent(1e-5, 0.0, eps, p) == p.rho
    assert inner_extent(1e-5, 0.0, eps, p, R_min=0.5) == 0.5
    with pytest.raises(SectorError):
        inner_extent(0.01j, -math.pi / 2, eps, p)


def test_solve_inner(example1, small_solver, tmp_path):
    spec, p = example1
    eps = 0.25
    fp = solve_inner(eps, spec, p, tol=1e-10, direction=math.pi / 2, **small_solver)
    assert fp.kind == "inner"
    assert fp.iterations >= 1
    assert np.all(fp.solution.values[0] == 0)
    assert fp.residual_norm <= 1e-10 * max(1.0, fp.norms[-1])
    assert not fp.contraction_ratios or min(fp.contraction_ratios[:10]) < 0.75

    again = apply_H(fp.solution, eps, spec, p, quad_nodes=small_solver["quad_nodes"])
    scale = np.max(np.abs(fp.solution.values))
    assert np.max(np.abs(again.values - fp.solution.values)) <= 1e-8 * scale

    artifacts = fp.save(tmp_path / "fp")
    assert set(artifacts) == {"header", "values"}
    loaded = FixedPointResult.load(tmp_path / "fp")
    assert loaded.kind == "inner"
    assert loaded.eps == eps
    assert loaded.iterations == fp.iterations
    assert np.allclose(loaded.solution.values, fp.solution.values)
    assert loaded.solution.params.chi == p.chi


def test_solve_inner_admissibility(example1, small_solver):
    spec, p = example1
    adm = sector_admissibility(0.0, 1.0, 0.04, spec, p, r_QRD=1.0)
    with pytest.raises(AdmissibilityError):
        solve_inner(0.25, spec, p, adm=adm, **small_solver)
    with pytest.raises(StructuralError):
        solve_inner(0.25, spec, p, **small_solver)



def test_inner_solution_of_monomial(example1):
    _, p = example1
    # kappa = 1: tau^2 e^(-m^2/2) has Laplace transform T^2 e^(-m^2/2)
    grid = RayGrid2D.from_function(
        lambda tau, m: tau ** 2 * np.exp(-m ** 2 / 2), 0.0, ray_grid(0.8, 200), 10.0, 81, p
    )
    fp = FixedPointResult(grid, 0, 0.0, (), 0.5)
    z = np.array([0.0, 0.5, 1.0])
    T = 0.02  # eps^alpha t with eps = 0.5, alpha = -1, t = 0.01
    expected = 0.5 ** -float(p.m0) * T ** 2 * np.exp(-z ** 2 / 2)
    assert np.allclose(inner_solution(0.01, z, 0.5, fp, p), expected, rtol=1e-6, atol=0)
    with pytest.raises(DivergenceError):
        inner_solution(0.5, z, 0.5, fp, p)


def test_apply_H_of_zero_is_the_forcing(example1):
    spec, p = example1
    eps = 0.25
    shape = RayGrid2D.zeros(math.pi / 2, ray_grid(p.rho, 40), 12.0, 17, p)
    problem = InnerProblem(eps, spec, p, shape.direction, shape.r_grid, 12.0, 17, quad_nodes=12)
    image = apply_H(shape, eps, spec, p, quad_nodes=12)
    assert np.all(image.values[0] == 0)
    assert np.allclose(image.values[1:], problem.forcing[1:] / problem.P[1:], rtol=1e-12, atol=0)
    assert np.any(image.values != 0)


def test_inner_map_is_affine_without_the_nonlinear_term(example1):
    spec, p = example1
    eps = 0.25
    problem = InnerProblem(eps, spec, p, math.pi / 2, ray_grid(p.rho, 40), 12.0, 17, quad_nodes=12)
    problem.nonlinear = []
    tau, m = problem.shape.tau[:, None], problem.shape.m[None, :]
    u = 1e-3 * tau * np.exp(-m ** 2)
    v = 1e-3 * tau ** 2 / (1 + m ** 2)
    base = problem.apply(np.zeros_like(u))
    combined = problem.apply(u + 2 * v) - base
    separate = (problem.apply(u) - base) + 2 * (problem.apply(v) - base)
    assert np.allclose(combined, separate, rtol=1e-9, atol=1e-12 * np.max(np.abs(combined)))


def test_forcing_psi_scales_with_eps(example1):
    spec, p = example1
    # Psi/eps^nF depends on tau/eps^(gamma + alpha) only, and gamma + alpha = 1/2
    eps1, eps2, n_r = 0.25, 0.16, 30
    first = forcing_psi(eps1, spec, p, RayGrid2D.zeros(0.3, ray_grid(p.rho, n_r), 12.0, 17, p))
    second = forcing_psi(eps2, spec, p, RayGrid2D.zeros(0.3, ray_grid(0.8 * p.rho, n_r), 12.0, 17, p))
    nF = spec.forcing.nF
    assert np.allclose(second.values / eps2 ** nF, first.values / eps1 ** nF, rtol=1e-9, atol=0)


def test_solve_inner_from_two_starts(example1, small_solver):
    spec, p = example1
    eps = 0.25
    fp = solve_inner(eps, spec, p, tol=1e-11, direction=math.pi / 2, **small_solver)
    start = fp.solution.with_values(fp.solution.values * (1 + 0.5j) + 1e-3 * fp.solution.tau[:, None])
    again = solve_inner(eps, spec, p, tol=1e-11, direction=math.pi / 2, start=start, **small_solver)
    scale = np.max(np.abs(fp.solution.values))
    assert np.max(np.abs(again.solution.values - fp.solution.values)) <= 1e-8 * scale


def _inner_at_first_rung(name, solver, tmp_path):
    run = RunConfig(load_config(name), output_dir=tmp_path)
    family = run.family("inner")
    eps = run.ladder("inner")[0]
    x = run.probe_x[0]
    T = family.inner_T(x, eps)
    direction = family.laplace_direction(run.flatness["index"], T)
    fp = solve_inner(eps, run.spec, run.params, direction=direction, T=T, **solver)
    t = complex(x) * eps_power(eps, run.params.chi - run.params.alpha)
    return run, fp, t, eps


@pytest.mark.slow
def test_inner_pde_residual_on_full_grid(tmp_path):
    run, fp, t, eps = _inner_at_first_rung("example1.json", {"n_r": 80, "quad_nodes": 12}, tmp_path)
    assert fp.solution.n_m == 2049
    assert inner_pde_residual(t, 0.0, eps, fp, run.spec, run.params) < 1e-3
    assert math.isfinite(inner_rational_residual(t, 0.0, eps, fp, run.spec, run.params))


@pytest.mark.slow
def test_solve_inner_second_example(tmp_path, small_solver):
    run, fp, t, eps = _inner_at_first_rung("example2.json", small_solver, tmp_path)
    assert fp.solution.r_grid[-1] >= run.params.rho
    value = inner_solution(t, 0.0, eps, fp, run.params)
    assert math.isfinite(abs(value))
    assert math.isfinite(inner_pde_residual(t, 0.0, eps, fp, run.spec, run.params))
