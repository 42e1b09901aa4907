import math

import numpy as np
import pytest

from turnpoint.asymptotics import (
    CocycleEvaluator,
    FlatnessFit,
    agrees,
    arc_log,
    cocycle_sup,
    complex_logsumexp,
    difference_log,
    eps_ladder,
    fit_flatness,
    fit_to_mapping,
    gevrey_bound,
    gevrey_report,
    naive_cocycle,
    rs_boundedness,
    sigma_t,
    tail_log,
)
from turnpoint.cli import RunConfig
from turnpoint.errors import DivergenceError, DomainError, FitError, StructuralError
from turnpoint.fourier import inverse_fourier_arrays
from turnpoint.geometry import associate_outer, build_covering
from turnpoint.inner import RayGrid2D
from turnpoint.model import load_config
from turnpoint.transforms import mk_laplace, ray_grid

EPS = np.geomspace(0.3, 0.1, 6)


def test_fit_flatness_recovers_exact_data():
    logs = 1.5 - 7.0 / EPS ** 2
    fit = fit_flatness(logs, EPS, 2)
    assert fit.order_tested == 2.0
    assert fit.slope == pytest.approx(-7.0)
    assert fit.intercept == pytest.approx(1.5)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.eps_points == pytest.approx(list(EPS))


def test_fit_flatness_takes_complex_eps():
    eps = EPS * np.exp(0.3j)
    fit = fit_flatness(1.5 - 7.0 / EPS ** 2, eps, 2)
    assert fit.slope == pytest.approx(-7.0)


def test_fit_flatness_errors():
    with pytest.raises(FitError):
        fit_flatness([1.0, 2.0, 3.0, 4.0], EPS[:4], 1)
    with pytest.raises(FitError):
        fit_flatness([1.0, 2.0, math.nan, 4.0, 5.0, 6.0], EPS, 1)
    with pytest.raises(FitError):
        fit_flatness([1.0] * 6, [0.3, 0.3, 0.2, 0.15, 0.12, 0.1], 1)


def test_fit_to_mapping():
    fit = fit_flatness(1.5 - 7.0 / EPS ** 2, EPS, 2)
    mapping = fit_to_mapping(fit)
    assert set(mapping) == set(FlatnessFit._fields)
    assert FlatnessFit(**mapping).slope == fit.slope


def _fit(order, r2):
    return FlatnessFit(order, -1.0, 0.0, r2, [], [])


def test_gevrey_report(example1):
    _, p = example1
    inner = [_fit(6.0, 0.995), _fit(6.0, 0.985), _fit(5.0, 0.9)]
    outer = [_fit(1.5, 0.98), _fit(1.0, 0.8)]
    report = gevrey_report(inner, outer, p)
    assert report["inner"]["best_order"] == 6.0
    assert report["outer"]["best_order"] == 1.5
    assert report["inner"]["flat"]
    assert report["orders_distinct"]
    assert report["pass"]


def test_gevrey_report_wrong_order(example1):
    _, p = example1
    report = gevrey_report([_fit(5.0, 0.99), _fit(6.0, 0.9)], [], p)
    assert report["inner"]["best_order"] == 5.0
    assert not report["inner"]["pass"]
    assert report["outer"]["best_order"] is None
    assert not report["pass"]


def test_gevrey_report_needs_a_good_fit(example1):
    _, p = example1
    report = gevrey_report([_fit(6.0, 0.9), _fit(3.0, 0.8)], [_fit(1.5, 0.99)], p)
    assert report["inner"]["best_order"] == 6.0
    assert not report["inner"]["pass"]
    assert report["outer"]["pass"]
    assert not report["pass"]


def test_order_ladder_picks_the_generating_order(example1):
    _, p = example1
    inner = [fit_flatness(1.0 - 2e-4 / EPS ** 6, EPS, order) for order in (3.0, 6.0, 12.0)]
    outer = [fit_flatness(1.0 - 2.0 / EPS ** 1.5, EPS, order) for order in (0.75, 1.5, 3.0)]
    report = gevrey_report(inner, outer, p)
    assert report["inner"]["best_order"] == 6.0
    assert report["outer"]["best_order"] == 1.5
    assert report["inner"]["mean_r2"]["6.0"] == pytest.approx(1.0)
    assert report["inner"]["mean_r2"]["3.0"] < 0.99
    assert report["inner"]["mean_r2"]["12.0"] < 0.99
    assert report["outer"]["mean_r2"]["0.75"] < 0.99
    assert report["outer"]["mean_r2"]["3.0"] < 0.99
    assert report["pass"]


def test_gevrey_bound():
    assert gevrey_bound(0, 0.1, 2.0, 3.0, 1.5) == pytest.approx(math.log(2.0))
    assert gevrey_bound(2, 0.1, 1.0, 1.0, 2.0) == pytest.approx(2 * math.log(0.1))
    with pytest.raises(DomainError):
        gevrey_bound(1, 0.1, 0.0, 1.0, 1.0)


def test_sigma_t(example1):
    _, p = example1
    # ((0.2 - 0.1)/nu)^(1/(gamma - Gamma)) with nu = 0.2, gamma - Gamma = 1/2
    assert sigma_t(1.0, p, 0.2, 0.1) == pytest.approx(0.25)
    assert sigma_t(4.0, p, 0.2, 0.1) == pytest.approx(4.0)
    with pytest.raises(DomainError):
        sigma_t(1.0, p, 0.1, 0.1)


def test_rs_boundedness():
    report = rs_boundedness({0.1: 1.0, 0.05: 0.8, 0.01: 0.5})
    assert report["bounded"]
    assert report["non_increasing"]
    assert report["bound"] == 1.0
    assert report["eps"] == [0.1, 0.05, 0.01]


def test_rs_boundedness_growth():
    report = rs_boundedness({0.1: 0.5, 0.05: 0.8, 0.01: 2.0})
    assert report["bounded"]
    assert not report["non_increasing"]
    with pytest.raises(FitError):
        rs_boundedness({0.1: 1.0, 0.05: 0.8})


def test_eps_ladder():
    covering = build_covering(4, math.pi / 2, 1.0)
    ladder = eps_ladder(covering, 0, 0.1, 0.01, 5)
    assert len(ladder) == 5
    assert np.allclose(np.angle(ladder), math.pi / 4)
    assert np.allclose(np.abs(ladder), np.geomspace(0.1, 0.01, 5))
    with pytest.raises(StructuralError):
        eps_ladder(covering, 0, 0.01, 0.1)


@pytest.mark.slow
def test_outer_cocycle_is_small(example1, small_solver):
    spec, p = example1
    covering = build_covering(4, math.pi / 2, p.eps0)
    family = associate_outer(covering, spec, p, math.pi / 4, 0.05, -0.3, 0.3, 5.0)
    eps = 0.01 * np.exp(1j * covering.overlap_bisector(0))
    value = cocycle_sup(family, 0, eps, [(1.0, 0.0)], spec, 0.04, solver=small_solver)
    assert value == -math.inf or value < 0
    naive = naive_cocycle(family, 0, eps, [(1.0, 0.0)], spec, 0.04, solver=small_solver)
    assert agrees(value, naive) is not False


@pytest.mark.slow
def test_inner_cocycle_is_small(tmp_path, small_solver):
    run = RunConfig(load_config("example1.json"), output_dir=tmp_path)
    eps = run.ladder("inner")[0]
    evaluator = CocycleEvaluator(run.family("inner"), run.spec, eps, run.rho("inner"), small_solver)
    value = evaluator.sup(run.flatness["index"], run.probe("inner"))
    assert value == -math.inf or value < 0


def test_complex_logsumexp_keeps_signs():
    logs = np.array([math.log(3.0), math.log(2.0) + 1j * math.pi])
    assert complex(complex_logsumexp(logs)) == pytest.approx(0.0, abs=1e-12)
    tiny = np.array([-2000.0, -2000.0 + 1j * math.pi / 2])
    expected = -2000.0 + 0.5 * math.log(2.0) + 1j * math.pi / 4
    assert complex(complex_logsumexp(tiny)) == pytest.approx(expected)
    assert complex_logsumexp(np.array([-np.inf, -np.inf])).real == -math.inf
    rows = np.array([[0.0, math.log(2.0)], [math.log(3.0), 0.0]])
    assert np.allclose(complex_logsumexp(rows, axis=0), np.log([4.0, 3.0]))


def test_agrees():
    assert agrees(-10.0, -10.5)
    assert not agrees(-10.0, -12.0)
    assert agrees(-10.0, -math.inf) is None


THETA = 0.4
TAU0 = 0.06 * np.exp(1j * THETA)
T_POLE = 0.01 * np.exp(1j * THETA)


def _pole_grid(direction, R, n_r=400):
    "w = tau/(tau - TAU0) e^(-m^2/2): the slope has a simple pole at TAU0."
    return RayGrid2D.from_function(
        lambda tau, m: tau / (tau - TAU0) * np.exp(-m ** 2 / 2), direction, ray_grid(R, n_r), 10.0, 81
    )


def _pole_kernel(tau):
    return -tau / T_POLE


def test_difference_log_matches_the_residue():
    # the rays enclose the pole beyond the arc: L_d' - L_d = -2 pi i e^(-TAU0/T) e^(-m^2/2)
    first, second = _pole_grid(THETA - 0.3, 0.42), _pole_grid(THETA + 0.3, 0.42)
    radius = 0.03
    arc_tau = radius * np.exp(1j * (THETA - 0.3 + 0.6 * np.linspace(0.0, 1.0, 9)))
    rows = np.exp(-first.m ** 2 / 2)[None, :] / (arc_tau - TAU0)[:, None]
    value = difference_log(first, second, rows, radius, _pole_kernel, [0.0])[0]
    assert value == pytest.approx(math.log(2 * math.pi) - 6.0, abs=1e-3)

    subtracted = mk_laplace(second, T_POLE, 1) - mk_laplace(first, T_POLE, 1)
    direct = math.log(abs(inverse_fourier_arrays(subtracted, first.m, first.weights, 0.0)))
    assert direct == pytest.approx(value, abs=1e-3)
    assert agrees(value, direct)


def test_arc_log_of_constant():
    # int over the arc of 1 dtau = radius (e^(i stop) - e^(i start))
    rows = np.ones((5, 3))
    logs = arc_log(rows, 0.1, 0.7, 0.5, lambda tau: np.zeros_like(tau))
    expected = 0.5 * (np.exp(0.7j) - np.exp(0.1j))
    assert np.allclose(np.exp(logs), expected)


def test_tail_log_checks_the_grid():
    with pytest.raises(DivergenceError):
        tail_log(_pole_grid(THETA - 0.3, 0.05, 100), 0.03, _pole_kernel)
    with pytest.raises(DomainError):
        tail_log(_pole_grid(THETA - 0.3, 0.02, 100), 0.03, _pole_kernel)
