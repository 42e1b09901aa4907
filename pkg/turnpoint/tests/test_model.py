from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turnpoint.errors import SingularSymbolError, StructuralError
from turnpoint.model import (
    EquationSpec,
    Polynomial,
    Profile,
    ScaleParams,
    check_scaling_identities,
    check_smallness,
    eps_power,
    eval_P,
    leading_index,
    load_spec,
    validate_inner,
    validate_outer,
)


def test_polynomial_drops_trailing_zeros():
    poly = Polynomial([1, 2, 0, 0])
    assert poly.degree() == 1
    assert poly.leading == 2
    assert poly(1j) == 1 + 2j
    assert Polynomial([0, 0]).is_zero
    assert Polynomial([0]).degree() == -1
    assert Polynomial([1, 2]) == Polynomial.from_json([[1, 0], 2])


def test_polynomial_rejects_scalar():
    with pytest.raises(StructuralError):
        Polynomial.from_json(3)


def test_profile_norm_is_amplitude():
    profile = Profile(-0.005, 1.0, 2.0)
    assert profile.norm() == 0.005
    assert profile(0.0) == -0.005
    assert abs(profile(3.0)) == pytest.approx(0.005 * 4.0 ** -3 * np.exp(-3.0))


@pytest.mark.parametrize("name", ["example1", "example2"])
def test_examples_pass_every_constraint(name, request):
    spec, p = request.getfixturevalue(name)
    inner = validate_inner(spec, p)
    outer = validate_outer(spec, p)
    assert inner.overall, inner.failures()
    assert outer.overall, outer.failures()
    assert inner.binding is None
    assert check_scaling_identities(spec, p).overall
    assert check_smallness(spec, 0.01).overall


def test_nonlinear_constraint_binds_at_chi(example1):
    spec, p = example1
    report = validate_inner(spec, p)
    # chi*kappa*(h/kappa + 1/kappa) + mu - 2 m0 - alpha h - chi kappa (delta_D - 1/kappa) - chi = chi - 6
    assert report["inner.nonlinear_h[0]"].lhs == 0

    lowered = validate_inner(spec, p.replace(chi=Fraction(5)))
    assert not lowered.overall
    assert lowered.binding.cid == "inner.nonlinear_h[0]"
    assert lowered.binding.lhs == -1


def test_constraint_report_mapping(example2):
    spec, p = example2
    mapping = validate_outer(spec, p).to_mapping()
    assert mapping["title"] == "outer"
    assert mapping["overall"] is True
    ids = [entry["id"] for entry in mapping["entries"]]
    assert "outer.Delta_D_gamma" in ids
    assert len(ids) == len(set(ids))
    assert all(isinstance(entry["citation"], str) for entry in mapping["entries"])


def test_scaling_identities_fail_when_gamma0_moves(example1):
    spec, p = example1
    report = check_scaling_identities(spec, p.replace(gamma0=Fraction(1)))
    assert not report["scaling.exponent_match"].passed


def test_smallness_flags_large_coefficient(example1):
    spec, _ = example1
    report = check_smallness(spec.with_changes(a=[0.5, 0.005]), 0.01)
    assert not report.overall
    assert report.binding.cid == "smallness.a[0]"
    with pytest.raises(StructuralError):
        check_smallness(spec, 0.0)


def test_smallness_of_R_ratio(example1):
    spec, _ = example1
    # sup_m |0.01 / (2 + im)| = 0.005
    assert check_smallness(spec, 0.01)["smallness.R_ratio[1]"].lhs == pytest.approx(0.005)


def test_spec_round_trip(example2):
    spec, _ = example2
    again = EquationSpec.from_json(spec.to_json())
    assert again.to_json() == spec.to_json()


def test_load_spec_from_data_directory():
    spec = load_spec("example1.json")
    assert spec.m0 == 5
    assert spec.d_D == 4
    assert spec.delta_D == 2
    assert spec.has_merging_roots
    assert leading_index(spec) == 1


@pytest.mark.parametrize(
    "changes",
    [
        {"a": [0.005]},
        {"k_exp": [0]},
        {"delta_exp": [2, 1]},
        {"Qpoly": [2, 1, 1]},
        {"Rpoly": [[0.01, 0, 1], [2, 1]]},
        {"forcing": {"nF": 5, "gamma": "1/2", "KF": 1.0, "F1": [1], "F2": [1, 0.5]}},
        {"forcing": {"nF": 5, "gamma": "3/2", "KF": 1.0, "F1": [1], "F2": [-1, 1]}},
        {"forcing": {"nF": 5, "gamma": "3/2", "KF": 1.0, "F1": [1, 1, 1], "F2": [1, 0.5]}},
    ],
)
def test_structural_errors(example1_config, changes):
    config = dict(example1_config)
    config.update(changes)
    with pytest.raises(StructuralError):
        EquationSpec.from_json(config)


def test_missing_key(example1_config):
    config = dict(example1_config)
    del config["Delta"]
    with pytest.raises(StructuralError):
        EquationSpec.from_json(config)


def test_vanishing_symbol(example1_config):
    config = dict(example1_config)
    config["Qpoly"] = [0, 1]
    config["Rpoly"] = [[0.01], [0, 1]]
    with pytest.raises(SingularSymbolError) as excinfo:
        EquationSpec.from_json(config)
    assert excinfo.value.m == pytest.approx(0.0)


def test_scale_params_defaults(example1_config, example1):
    spec, _ = example1
    p = ScaleParams.from_mapping({"kappa": 1, "chi": 6, "alpha": -1}, spec)
    assert p.gamma == Fraction(3, 2)
    assert p.beta == 1.0
    assert p.mu == 2.0
    assert p.nu == pytest.approx(2.0 * 0.1 ** 0)
    assert p.dlk == (1,)
    with pytest.raises(StructuralError):
        ScaleParams.from_mapping({"kappa": 1, "alpha": -1}, spec)
    with pytest.raises(StructuralError):
        ScaleParams.from_mapping(dict(example1_config["params"], Gamma="2"), spec)


def test_eval_P(example1):
    spec, _ = example1
    eps = 0.1
    t = np.array([0.0, 1j * np.sqrt(eps), 1.0])
    values = eval_P(t, eps, spec)
    assert values[0] == pytest.approx(0.005 * eps ** 5)
    assert abs(values[1]) < 1e-20
    assert values[2] == pytest.approx(0.005 * eps ** 5 + 0.005 * eps ** 4)
    assert isinstance(eval_P(0.5, eps, spec), complex)


@settings(max_examples=50, deadline=None)
@given(
    modulus=st.floats(min_value=1e-3, max_value=1.0),
    angle=st.floats(min_value=-3.0, max_value=3.0),
    numerator=st.integers(min_value=-9, max_value=9),
    denominator=st.integers(min_value=1, max_value=6),
)
def test_eps_power_multiplies(modulus, angle, numerator, denominator):
    eps = modulus * np.exp(1j * angle)
    exponent = Fraction(numerator, denominator)
    value = eps_power(eps, exponent)
    assert abs(value) == pytest.approx(modulus ** float(exponent), rel=1e-9)
    if denominator == 1:
        assert value == pytest.approx(eps ** numerator, rel=1e-9)


def test_eps_power_at_zero():
    assert eps_power(0, Fraction(1, 2)) == 0
    with pytest.raises(ZeroDivisionError):
        eps_power(0, Fraction(-1, 2))
