import math
from fractions import Fraction

import numpy as np
import pytest

from turnpoint.errors import ContradictionError, GeometryError, SectorError
from turnpoint.geometry import (
    GoodCovering,
    Sector,
    associate_inner,
    associate_outer,
    build_covering,
    check_family,
    domains_disjoint,
    scaling_gap,
    wrap,
)


def test_wrap():
    assert wrap(math.pi) == pytest.approx(-math.pi)
    assert wrap(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert wrap(0.3) == pytest.approx(0.3)


def test_sector_contains():
    sector = Sector(math.pi, 1.0, 0.0, 0.5)
    assert sector.contains(-0.2 + 0.01j)
    assert sector.contains(-0.2 - 0.01j)
    assert not sector.contains(0.2)
    assert not sector.contains(-0.7)
    with pytest.raises(GeometryError):
        Sector(0.0, 0.0)
    with pytest.raises(GeometryError):
        Sector(0.0, 1.0, 0.5, 0.1)


@pytest.mark.parametrize("count", [3, 4, 7, 12, 48])
def test_build_covering(count):
    covering = build_covering(count, 2 * math.pi / count, 1.0)
    assert len(covering) == count
    assert covering[count].bisector == covering[0].bisector
    aperture = covering[0].aperture
    assert 2 * math.pi / count < aperture < 4 * math.pi / count
    mapping = covering.to_mapping()
    assert len(mapping["sectors"]) == count


def test_overlap_bisector():
    covering = build_covering(4, math.pi / 2, 1.0)
    assert covering.overlap_bisector(0) == pytest.approx(math.pi / 4)
    assert wrap(covering.overlap_bisector(3)) == pytest.approx(-math.pi / 4)


def test_covering_errors():
    with pytest.raises(GeometryError):
        build_covering(1, math.pi, 1.0)
    with pytest.raises(GeometryError):
        build_covering(4, math.pi, 1.0)
    # a gap between 0 and pi/2
    with pytest.raises(GeometryError):
        GoodCovering([Sector(0.0, 1.0), Sector(math.pi / 2, 1.0), Sector(math.pi, 3.0),
                      Sector(3 * math.pi / 2, 1.0)], 1.0, 1.0)
    # three sectors around 0
    with pytest.raises(GeometryError):
        GoodCovering([Sector(0.0, 2.0), Sector(0.3, 2.0), Sector(-0.3, 6.0)], 1.0, 1.0)


def test_associate_inner(example1):
    spec, p = example1
    covering = build_covering(12, 2 * math.pi / 12, p.eps0)
    family = associate_inner(covering, spec, p, p.rho, 1.0, 1.0, 0.1, x_direction=math.pi / 2)
    assert len(family.directions) == 12
    assert all(report.passed for report in family.reports)
    assert family.theta == pytest.approx(math.pi + 0.5)
    # the roots of P_m sit on the real axis, so no direction may come near 0 or pi
    for d in family.directions:
        assert abs(math.sin(d)) > math.sin(0.5)

    eps = 0.25 * np.exp(1j * covering[0].bisector)
    assert check_family(family, [(0, eps, 0.5j), (0, eps, 0.9j)]) == 0
    T = family.inner_T(0.5j, eps)
    assert T == pytest.approx(0.5j * eps ** 6)
    d = family.laplace_direction(0, T)
    assert math.cos(p.kappa * (d - np.angle(T))) >= family.delta1
    assert family.to_mapping()["kind"] == "inner"


def test_associate_inner_needs_alpha_below_chi(example1):
    spec, p = example1
    covering = build_covering(12, 2 * math.pi / 12, p.eps0)
    with pytest.raises(GeometryError):
        associate_inner(covering, spec, p.replace(alpha=Fraction(7)), p.rho, 1.0, 1.0, 0.1)


def test_laplace_direction_rejects_far_argument(example1):
    spec, p = example1
    covering = build_covering(12, 2 * math.pi / 12, p.eps0)
    family = associate_inner(covering, spec, p, p.rho, 1.0, 1.0, 0.1, x_direction=math.pi / 2)
    low, high = family.sector_range(0)
    far = 0.5 * (low + high) + math.pi
    with pytest.raises(SectorError):
        family.laplace_direction(0, np.exp(1j * far))


def test_associate_outer(example1):
    spec, p = example1
    covering = build_covering(4, math.pi / 2, p.eps0)
    family = associate_outer(covering, spec, p, math.pi / 4, 0.05, -0.3, 0.3, 5.0)
    assert len(family.directions) == 4
    # the root of F2 sits at -2
    for u in family.directions:
        assert abs(wrap(u - math.pi)) > math.pi / 8
    eps = 0.01 * np.exp(1j * covering[1].bisector)
    u = family.outer_direction(1, 1.0, eps)
    assert math.cos(u + family.outer_ratio_arg(1.0, eps)) >= family.delta1
    assert check_family(family, [(1, eps, 1.0), (1, eps, np.exp(0.2j))]) == 0


def test_associate_outer_errors(example1):
    spec, p = example1
    covering = build_covering(4, math.pi / 2, p.eps0)
    with pytest.raises(GeometryError):
        associate_outer(covering, spec, p, math.pi / 4, 1.5, -0.3, 0.3, 5.0)
    with pytest.raises(GeometryError):
        associate_outer(covering, spec, p, math.pi / 4, 0.05, -0.3, 0.3, 1.0)


def test_second_example_outer_covering(example2):
    spec, p = example2
    family = associate_outer(build_covering(7, 2 * math.pi / 7, p.eps0), spec, p, math.pi / 4, 0.1,
                             -0.3, 0.3, 2.5)
    assert len(family.directions) == 7


def test_scaling_gap(example1):
    _, p = example1
    margin, threshold = scaling_gap(p, 1.0, 5.0)
    assert margin == Fraction(13, 2)
    assert threshold == pytest.approx(5.0 ** (2 / 13))
    assert domains_disjoint(0.5 * threshold, p, 1.0, 5.0)
    assert not domains_disjoint(2.0 * threshold, p, 1.0, 5.0)


def test_scaling_gap_second_example(example2):
    _, p = example2
    margin, _ = scaling_gap(p, 1.0, 2.5)
    assert margin == Fraction(25, 2)


def test_scaling_gap_contradiction(example1):
    _, p = example1
    with pytest.raises(ContradictionError):
        scaling_gap(p.replace(chi=Fraction(-1, 2)), 1.0, 5.0)
