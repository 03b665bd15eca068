import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sle_lab.conformal import strip_slit_map
from sle_lab.loewner import (COSH_ZIPPER, ODE_RK4, DrivingPath, ZipperState, constant_driving,
                             evolve_halfplane, evolve_strip, run_endpoint, run_points, run_rng,
                             sample_driving, trace, zipper_step)


def smooth_driving(dt=1e-3, T=1.0):
    t = np.arange(int(round(T / dt)) + 1) * dt
    x = np.sin(3 * t)
    return DrivingPath(1.0, dt, T, 0, "strip", t, x, x)


def test_driving_reproducible_and_independent():
    a = sample_driving(4, 1e-3, 1.0, 11)
    b = sample_driving(4, 1e-3, 1.0, 11)
    c = sample_driving(4, 1e-3, 1.0, 11, index=1)
    assert np.array_equal(a.xi, b.xi)
    assert not np.array_equal(a.xi, c.xi)
    assert a.n_steps == 1000 and a.xi[0] == 0


def test_driving_scaling():
    d = sample_driving(6, 1e-3, 50.0, 5)
    inc = np.diff(d.xi)
    assert abs(inc.var() / d.dt - 6) < 0.2
    h = sample_driving(6, 1e-3, 1.0, 5, parametrization="halfplane")
    assert np.all(np.abs(h.xi) < 1)
    assert np.allclose(h.xi, np.tanh(h.strip_driving() / 2))


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(T=-1.0), dict(kappa=-1.0),
                                dict(parametrization="disc")])
def test_driving_validation(kw):
    args = dict(kappa=2.0, dt=1e-3, T=1.0, seed=0)
    args.update(kw)
    with pytest.raises(ValueError):
        sample_driving(**args)


def test_zero_driving_matches_slit_map():
    g = np.array([x + 1j * y for x in (-2.05, -0.45, 0.55, 1.95) for y in (0.3, 1.2, 2.8)])
    exact = strip_slit_map(0.5, g)
    for method in (ODE_RK4, COSH_ZIPPER):
        ev = evolve_strip(constant_driving(1e-3, 0.5), g, method)
        assert np.abs(ev.w - exact).max() < 1e-6


@pytest.mark.parametrize("y", [0.5, 1.0, 2.0])
def test_swallow_time_closed_form(y):
    exact = -2 * np.log(np.cos(y / 2))
    ev = evolve_strip(constant_driving(1e-4, exact + 0.5), [1j * y], ODE_RK4)
    assert ev.status[0] == 1
    assert abs(ev.tau[0] - exact) / exact < 1e-4


def test_rk4_and_zipper_agree_on_brownian_driving():
    d = sample_driving(4, 1e-3, 0.5, 3)
    z = np.array([0.3 + 1.2j, -1 + 2j])
    a = evolve_strip(d, z, ODE_RK4)
    b = evolve_strip(d, z, COSH_ZIPPER)
    assert np.abs(a.w - b.w).max() < 1e-3


def test_halfplane_flow_is_conjugate_to_strip_flow():
    z = np.array([0.3 + 1.2j, -1 + 2j])
    s = evolve_strip(sample_driving(4, 1e-3, 0.5, 3), z, ODE_RK4)
    h = evolve_halfplane(sample_driving(4, 1e-3, 0.5, 3, parametrization="halfplane"),
                         np.tanh(z / 2))
    assert np.abs(np.tanh(s.w / 2) - h.w).max() < 1e-3
    # marked points stay put
    assert abs(h.boundary_points[0] + 1) < 1e-9 and abs(h.boundary_points[1] - 1) < 1e-9


def test_log_derivative_tracks_difference_quotient():
    d = sample_driving(2, 1e-3, 0.3, 4)
    z = 0.4 + 1.0j
    hh = 1e-6
    ev = evolve_strip(d, [z - hh, z, z + hh], ODE_RK4)
    fd = (ev.w[2] - ev.w[0]) / (2 * hh)
    assert abs(np.exp(ev.log_dw[1]) - fd) < 1e-5 * abs(fd)


def test_evolve_rejects_points_outside_strip():
    with pytest.raises(ValueError):
        evolve_strip(constant_driving(1e-3, 0.1), [4j])
    with pytest.raises(ValueError):
        evolve_strip(sample_driving(2, 1e-3, 0.1, 0, parametrization="halfplane"), [1j])


def test_trace_methods_agree_on_smooth_driving():
    d = smooth_driving()
    assert np.abs(trace(d, COSH_ZIPPER) - trace(d, ODE_RK4)).max() < 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_trace_methods_agree_on_brownian_driving(seed):
    # pointwise agreement degrades where the Brownian trace nearly touches itself,
    # so the bulk is held tighter than the worst point
    d = sample_driving(2, 1e-3, 0.3, seed)
    err = np.abs(trace(d, COSH_ZIPPER) - trace(d, ODE_RK4))
    assert np.median(err) < 2e-3
    assert np.quantile(err, 0.95) < 1e-2
    assert err.max() < 0.05


def test_trace_starts_at_driving_and_stays_in_strip():
    d = sample_driving(4, 1e-3, 1.0, 2)
    tr = trace(d)
    assert tr[0] == 0
    assert np.all(tr[1:].imag > 0) and np.all(tr.imag < np.pi)


def test_zipper_step_is_slit_map_for_constant_driving():
    g = np.array([0.5 + 0.5j, -1 + 2j])
    state = ZipperState(points=g.copy(), log_dw=np.zeros(2, dtype=complex))
    for _ in range(10):
        state = zipper_step(state, 0.0, 0.0, 0.01)
    assert np.abs(state.points - strip_slit_map(0.1, g)).max() < 1e-12
    assert np.abs(state.forward(g) - state.points).max() < 1e-12
    assert abs(state.t - 0.1) < 1e-12


def test_snapshot_json_round_trip():
    d = sample_driving(6, 1e-2, 0.5, 1)
    ev = evolve_strip(d, [0.05 + 0.05j, 2 + 2j], COSH_ZIPPER)
    snap = json.loads(ev.snapshot_json())
    assert snap["seed"] == 1 and len(snap["trace"]) == d.n_steps + 1
    assert ev.trace_csv().count("\n") == d.n_steps + 2


@given(st.integers(0, 10 ** 6))
@settings(max_examples=10, deadline=None)
def test_run_points_keeps_points_in_strip(seed):
    r = run_points(4.0, [0.3 + 1.5j, -1 + 0.4j], run_rng(seed), 1e-3, 0.5)
    alive = r.status == 0
    assert np.all(r.X[alive].imag > 0) and np.all(r.X[alive].imag < np.pi)
    # Im w_t decreases along the flow
    assert np.all(r.X[alive].imag <= np.array([1.5, 0.4])[alive] + 1e-12)


def test_run_points_independent_of_chunk_size():
    a = run_points(4.0, [0.3 + 1.5j], run_rng(5), 1e-3, 1.0, chunk=64)
    b = run_points(4.0, [0.3 + 1.5j], run_rng(5), 1e-3, 1.0, chunk=4096)
    assert a.X[0] == b.X[0] and a.t == b.t


def test_endpoint_zero_kappa_is_origin():
    assert abs(run_endpoint(0.0, run_rng(0), 1e-2, 5.0)) < 1e-12
