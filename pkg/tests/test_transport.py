import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sle_lab.cft import hat_phi_expectation, params_from_kappa
from sle_lab.checks import bpz_cases, bpz_convergence
from sle_lab.conformal import CriticalPointError
from sle_lab.transport import (SCALAR, ConformalType, MapData, Observable, bpz_cardy_residual,
                               constant_observable, differential, flow_lie_derivative,
                               hat_phi_family, lie_derivative, loewner_vector_field, transport)

upper = st.builds(complex, st.floats(-0.8, 0.8), st.floats(0.2, 1.5))


def test_transport_rules():
    m = MapData(dh=2.0 + 1j, d2h=0.5j, schwarzian=0.3)
    assert transport(3.0, SCALAR, m) == 3.0
    diff = transport(1.0, differential(2, 1), m)
    assert abs(diff - (2 + 1j) ** 2 * np.conj(2 + 1j)) < 1e-12
    pre = transport(1.0, ConformalType("pre", mu=2.0), m)
    assert abs(pre - ((2 + 1j) + 2 * 0.5j / (2 + 1j))) < 1e-12
    schw = transport(1.0, ConformalType("schwarzian", mu=0.5), m)
    assert abs(schw - ((2 + 1j) ** 2 + 0.15)) < 1e-12
    pp = transport(0.0, ConformalType("prepre", mu=1j, real_part=True), m)
    assert abs(pp - 2 * np.real(1j * np.log(2 + 1j))) < 1e-12


def test_transport_critical_point():
    with pytest.raises(CriticalPointError):
        transport(1.0, SCALAR, MapData(dh=0.0))


def test_boundary_dims_only_for_differentials():
    with pytest.raises(ValueError):
        ConformalType("pre", mu=1.0, boundary_dims=(0.1, 0.0))


@pytest.mark.parametrize("ctype", [
    differential(0.7, -0.3),
    ConformalType("prepre", mu=0.4 + 0.2j, real_part=True),
    ConformalType("pre", mu=0.6),
    ConformalType("schwarzian", mu=0.25),
])
def test_lie_derivative_matches_flow_oracle(ctype):
    v = loewner_vector_field(0.2)
    f = lambda z: np.sin(z) + 0.3 * z * np.conj(z)
    obs = Observable(lambda pts: f(pts[0]), (ctype,))
    z = 0.4 + 0.6j
    assert abs(lie_derivative(obs, v, [z]) - flow_lie_derivative(f, ctype, v, z, dt=1e-4)) < 1e-6


def test_constant_observable_has_zero_lie_derivative():
    v = loewner_vector_field(-0.3)
    assert abs(lie_derivative(constant_observable(2.0), v, [0.3 + 0.5j])) < 1e-12


def test_vector_field_derivatives():
    v = loewner_vector_field(0.1)
    z = 0.4 + 0.3j
    h = 1e-5
    vals = v.derivs(z)
    for k in range(3):
        fd = (v.derivs(z + h)[k] - v.derivs(z - h)[k]) / (2 * h)
        assert abs(fd - vals[k + 1]) < 1e-5 * max(1, abs(vals[k + 1]))


@pytest.mark.parametrize("kappa", [8 / 3, 4.0, 6.0])
def test_bpz_cardy_cases(kappa):
    params = params_from_kappa(kappa)
    for label, fam, pts, xi in bpz_cases(params):
        assert bpz_cardy_residual(params, fam, pts, xi) < 1e-5, label
        _, ratios = bpz_convergence(params, fam, pts, xi)
        assert all(3 < q < 5 for q in ratios), (label, ratios)


@given(upper, st.floats(-0.5, 0.5), st.sampled_from([2.0, 8 / 3, 4.0, 6.0]))
@settings(max_examples=25, deadline=None)
def test_bpz_cardy_hat_phi_property(z, xi, kappa):
    params = params_from_kappa(kappa)
    assert bpz_cardy_residual(params, hat_phi_family(params), [(z,)], xi) < 1e-5


def test_bpz_cardy_detects_wrong_background_charge():
    import dataclasses
    params = params_from_kappa(6.0)
    wrong = dataclasses.replace(params, b=params.b + 0.1)
    assert bpz_cardy_residual(params, hat_phi_family(wrong), [(0.3 + 1j,)], 0.1) > 1e-3


def test_hat_phi_family_is_tip_chart_expectation():
    params = params_from_kappa(8 / 3)
    obs = hat_phi_family(params)(0.0)
    z = 0.2 + 0.9j
    assert abs(obs([z]) - hat_phi_expectation(params, z)) < 1e-12
