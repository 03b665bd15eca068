import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sle_lab.cft import Divisor, hat_phi_expectation, hat_rooted_corr, params_from_kappa
from sle_lab.conformal import STRIP, SlitMapSpec, psi_slit
from sle_lab.loewner import DrivingPath, constant_driving
from sle_lab.observables import (CardyZhanMap, cardy_zhan_map, endpoint_cdf, left_prob,
                                 martingale_observable, restriction_prob, restriction_process,
                                 right_prob, slit_polyline, swallow_prob)

strip_pts = st.builds(complex, st.floats(-4, 4), st.floats(0.05, np.pi - 0.05))

# frozen values at kappa = 6: (swallow, right, left)
FROZEN_CZ = {
    0.5 + 0.5j: (0.437842992275713, 0.41256331692652126, 0.14959369079776574),
    -1 + 1.5j: (0.21806046400503362, 0.24791176510266583, 0.5340277708923005),
    0.3 + 2.5j: (0.08838459075654531, 0.4926245429336382, 0.41899086630981647),
    1j: (0.3437603708571093, 0.32811981457144535, 0.32811981457144535),
    0.4 + 1.2j: (0.2938925068597005, 0.42130974431454715, 0.2847977488257524),
}


@pytest.mark.parametrize("z", list(FROZEN_CZ))
def test_frozen_cardy_zhan_values(z):
    s, r, l = FROZEN_CZ[z]
    assert abs(swallow_prob(6, z) - s) < 1e-10
    assert abs(right_prob(6, z) - r) < 1e-10
    assert abs(left_prob(6, z) - l) < 1e-10


def test_frozen_map_value():
    assert abs(cardy_zhan_map(6, 0.5 + 0.5j) - (0.6314848130643778 + 0.37918315417976106j)) < 1e-10
    assert abs(right_prob(3, 1 + 1j) - 0.8650271484699065) < 1e-10


@given(strip_pts, st.sampled_from([4.5, 6.0, 8.0, 12.0]))
@settings(max_examples=40, deadline=None)
def test_routes_agree(z, kappa):
    cz = CardyZhanMap(kappa)
    assert abs(cz(z, "zero") - cz(z, "vertical")) < 1e-9


@given(strip_pts, st.sampled_from([4.5, 6.0, 8.0]))
@settings(max_examples=40, deadline=None)
def test_probabilities_sum_to_one(z, kappa):
    parts = [swallow_prob(kappa, z), right_prob(kappa, z), left_prob(kappa, z)]
    assert abs(sum(parts) - 1) < 1e-12
    assert all(-1e-9 <= q <= 1 + 1e-9 for q in parts)


@given(st.floats(0.05, 3.1), st.sampled_from([2.0, 4.0, 6.0, 8.0]))
@settings(max_examples=30, deadline=None)
def test_symmetric_axis(y, kappa):
    assert abs(right_prob(kappa, 1j * y) - left_prob(kappa, 1j * y)) < 1e-10
    assert abs(cardy_zhan_map(kappa, 1j * y).real - 0.5) < 1e-10


def test_far_points():
    # the approach to 1 is exponential in Re z, slower for larger kappa
    assert right_prob(6, 30 + 1j) > 0.9999
    assert left_prob(6, -30 + 1j) > 0.9999
    assert right_prob(3, 12 + 1j) > 0.9999
    assert right_prob(6, 30 + 1j) > right_prob(6, 12 + 1j) > right_prob(6, 4 + 1j)


def test_swallow_needs_kappa_above_4():
    with pytest.raises(ValueError):
        swallow_prob(4, 1j)
    assert abs(right_prob(3, 0.5 + 1j) + left_prob(3, 0.5 + 1j) - 1) < 1e-15


@pytest.mark.parametrize("kappa", [4.5, 6.0, 8.0])
def test_triangle_boundary(kappa):
    cz = CardyZhanMap(kappa)
    M0 = cz.M0
    xs = np.linspace(0.05, 8, 25)

    def collinear(pts, a, b):
        d = b - a
        return max(abs((np.conj(d) * (p - a)).imag) / abs(d) for p in pts)

    left_side = [cz(-x + 0j) for x in xs]
    right_side = [cz(x + 0j) for x in xs]
    top = [cz(x + 1j * np.pi) for x in np.linspace(-8, 8, 25)]
    assert collinear(left_side, 0, M0) < 1e-6
    assert collinear(right_side, M0, 1) < 1e-6
    assert max(abs(p.imag) for p in top) < 1e-6
    # isosceles with base angles 2 pi / kappa
    assert abs(np.angle(M0) - 2 * np.pi / kappa) < 1e-10
    assert abs(np.angle(1 - np.conj(M0)) - 2 * np.pi / kappa) < 1e-10


def test_endpoint_cdf_basic():
    for k in (2, 4, 6, 8):
        assert endpoint_cdf(k, 0.0) == 0.5
        assert endpoint_cdf(k, 60.0) > 1 - 1e-10
        assert endpoint_cdf(k, -60.0) < 1e-10


def test_endpoint_cdf_closed_form_kappa_4():
    # int sech(s/2) ds = 4 arctan(tanh(s/4)), total 2 pi
    exact = 0.5 + 4 * np.arctan(np.tanh(0.25)) / (2 * np.pi)
    assert abs(endpoint_cdf(4, 1.0) - exact) < 1e-10
    assert abs(endpoint_cdf(4, 1.0, "quad") - exact) < 1e-10
    assert abs(exact - 0.652910046623904) < 1e-12


@given(st.floats(-10, 10), st.sampled_from([1.0, 8 / 3, 4.0, 6.0, 10.0]))
@settings(max_examples=50, deadline=None)
def test_endpoint_routes_agree(x, kappa):
    assert abs(endpoint_cdf(kappa, x) - endpoint_cdf(kappa, x, "quad")) < 1e-9


def test_endpoint_cdf_monotone_and_matches_top_line():
    xs = np.linspace(-10, 10, 201)
    v = np.array([endpoint_cdf(6, x) for x in xs])
    assert np.all(np.diff(v) >= 0)
    for x in (-1.3, 0.4, 2.0):
        assert abs(cardy_zhan_map(6, x + 1j * np.pi).real - endpoint_cdf(6, x)) < 1e-12


def test_restriction_prob_values():
    assert abs(restriction_prob(SlitMapSpec(0.5, 0.5)) - 0.8051350737452191) < 1e-13
    # empty hull: the identity map
    assert abs(restriction_prob(lambda z: z) - 1) < 1e-9
    spec = SlitMapSpec(-0.7, 1.3)
    via_map = restriction_prob(lambda z: psi_slit(spec, z))
    assert abs(via_map - restriction_prob(spec)) < 1e-8


def test_restriction_prob_rejects_hull_at_start():
    with pytest.raises(ValueError):
        restriction_prob(SlitMapSpec(0.0, 0.5))


@given(st.one_of(st.floats(-3, -0.1), st.floats(0.1, 3)), st.floats(0.05, 2.8))
@settings(max_examples=40, deadline=None)
def test_restriction_prob_in_unit_interval(x, h):
    assert 0 < restriction_prob(SlitMapSpec(x, h)) <= 1


def test_restriction_prob_monotone_in_height():
    for x in (-1.0, 0.3, 2.0):
        v = [restriction_prob(SlitMapSpec(x, h)) for h in np.linspace(0.1, 3.0, 30)]
        assert np.all(np.diff(v) < 0)


def test_slit_polyline():
    P = slit_polyline(SlitMapSpec(0.5, 0.5), 8)
    assert len(P) == 9 and P[0] == 0.5 and abs(P[-1] - (0.5 + 0.5j)) < 1e-15


def test_restriction_process_start_and_continuity():
    spec = SlitMapSpec(1.5, 0.5)
    series = restriction_process(constant_driving(1e-3, 0.01), spec)
    m = np.asarray(series.values)
    assert abs(m[0] - restriction_prob(spec)) < 1e-6
    assert np.abs(m - m[0]).max() < 0.01
    assert not series.hit


def test_restriction_process_detects_hit():
    # driving runs to the slit faster than the flow pushes the slit away
    t = np.arange(1001) * 1e-3
    x = 10.0 * t
    series = restriction_process(DrivingPath(1.0, 1e-3, 1.0, 0, "strip", t, x, x),
                                 SlitMapSpec(0.5, 1.0))
    assert series.hit and 0 < series.hit_time < 0.2


# ---------------------------------------------------------------------------
# martingale-observables

def test_hat_phi_observable_initial_value():
    p = params_from_kappa(8 / 3)
    obs = martingale_observable("hat_phi", p)
    z = 0.3 + 1.5j
    assert abs(obs.initial(z) - hat_phi_expectation(p, z, STRIP)) < 1e-14
    # the form term reacts to log w'
    shifted = obs.value(z, 0.2j)
    assert abs(shifted - obs.initial(z) + 2 * p.b * 0.2) < 1e-14


def test_vertex_observable_initial_value():
    p = params_from_kappa(4)
    d = Divisor(((0.3 + 1j, 0.3, -0.1), (-0.5 + 2j, 0.1, -0.2)), -0.05, -0.05)
    obs = martingale_observable("vertex", p, d)
    v0 = obs.initial(d.points)
    assert abs(v0 - hat_rooted_corr(p, d, chart=STRIP)) < 1e-12


def test_observable_validation():
    with pytest.raises(ValueError):
        martingale_observable("hat_T", params_from_kappa(4))
    with pytest.raises(ValueError):
        martingale_observable("vertex", params_from_kappa(4),
                              Divisor(((1j, 0.3, 0.0),)))
    with pytest.raises(ValueError):
        martingale_observable("vertex", params_from_kappa(4))
    const = martingale_observable("constant", params_from_kappa(2))
    assert const.value(1j, 0.3j) == 1
