"""Deterministic verification suites: Mobius invariance, the rooting limit,
BPZ-Cardy residuals, capacity and slit-map checks.

Each suite returns an McReport whose estimate is the worst error found
(reference 0, stderr 0), so the CLI and the tests share one pass rule.
"""
import dataclasses
import time

import numpy as np

from .cft import (Divisor, log_vertex_corr_w, multi_vertex_corr, params_from_kappa,
                  rooted_vertex_corr)
from .conformal import (SlitMapSpec, compose, mobius_aut, mobius_aut_log_derivative, psi_slit,
                        scap_numeric, scap_vertical_slit, strip_slit_map)
from .harness import McReport
from .loewner import ODE_RK4, constant_driving, evolve_strip, run_rng
from .transport import (bpz_cardy_residual, hat_phi_family, hat_T_family, hat_vertex_family)

BPZ_KAPPAS = (8 / 3, 4.0, 6.0)
BPZ_STEPS = (4e-2, 2e-2, 1e-2)


def random_divisor(rng, n_points=None, rooted=False, charge=0.6):
    """Neutral divisor with bulk points in the box [-2, 2] x [0.2, 2].

    The last charge (a root when rooted) absorbs the total so that the
    divisor is neutral.
    """
    n = int(rng.integers(1, 4)) if n_points is None else n_points
    pts = rng.uniform(-2, 2, n) + 1j * rng.uniform(0.2, 2, n)
    s = rng.uniform(-charge, charge, n)
    ss = rng.uniform(-charge, charge, n)
    if rooted:
        rm = rng.uniform(-charge, charge)
        rp = -(rm + s.sum() + ss.sum())
        return Divisor(tuple(zip(pts, s, ss)), rm, rp)
    ss[-1] = -(s.sum() + ss[:-1].sum())
    return Divisor(tuple(zip(pts, s, ss)))


def random_mobius_param(rng):
    """a with |a| in (1.1, 4), either sign."""
    return float(rng.choice([-1, 1]) * rng.uniform(1.1, 4.0))


def mobius_error(params, d: Divisor, a):
    """|E[O under h] / E[O] - 1| for h(z) = (az + 1)/(z + a) on (H, -1, 1)."""
    z = d.points
    roots = (d.root_minus, d.root_plus)
    v0 = log_vertex_corr_w(params, z, np.zeros(len(z)), d.sigma, d.sigma_star, roots, (0, 0))
    w = mobius_aut(a, z)
    ld = mobius_aut_log_derivative(a, z)
    lr = (np.log((a * a - 1) / (a - 1) ** 2), np.log((a * a - 1) / (a + 1) ** 2))
    v1 = log_vertex_corr_w(params, w, ld, d.sigma, d.sigma_star, roots, lr)
    return float(abs(np.exp(v1 - v0) - 1))


def mobius_suite(n=50, seed=7, kappa=8 / 3, tolerance=1e-9):
    """[invariance report, negative control on charged (non-neutral) divisors]."""
    t0 = time.perf_counter()
    params = params_from_kappa(kappa)
    rng = run_rng(seed)
    worst = broken = 0.0
    for k in range(n):
        d = random_divisor(rng, rooted=bool(k % 2))
        a = random_mobius_param(rng)
        worst = max(worst, mobius_error(params, d, a))
        charged = Divisor(d.entries[:-1] + ((d.points[-1], d.sigma[-1] + 0.3, d.sigma_star[-1]),),
                          d.root_minus, d.root_plus)
        broken = max(broken, mobius_error(params, charged, a))
    wall = time.perf_counter() - t0
    return [McReport("mobius", n, worst, 0.0, 0.0, tolerance, seed, wall),
            McReport("mobius/non-neutral", n, broken, 0.0, 0.0, tolerance, seed, wall,
                     expect_fail=True)]


def rooting_constant(params, d: Divisor, with_phase=True):
    """Normalization between the eps-limit of unrooted correlators and the rooted one."""
    b = params.b
    sm, sp = d.root_minus, d.root_plus
    bulk = float(np.sum(d.sigma - d.sigma_star))
    phase = np.exp(1j * np.pi * (sm * sp + sp * bulk)) if with_phase else 1.0
    return 2 ** (b * (sm + sp)) * 2 ** (sm * sp) * phase


def unrooted_limit(params, d: Divisor, eps):
    """E[O with charges at -1 + eps, 1 - eps] / eps^{(sigma- + sigma+) b}.

    Richardson-extrapolated from eps and eps/2.
    """
    def scaled(e):
        moved = Divisor(d.entries + ((-1 + e, d.root_minus, 0.0), (1 - e, d.root_plus, 0.0)))
        return multi_vertex_corr(params, moved) / e ** ((d.root_minus + d.root_plus) * params.b)
    return 2 * scaled(eps / 2) - scaled(eps)


def rooting_error(params, d: Divisor, eps=1e-4, with_phase=True):
    exact = rooted_vertex_corr(params, d)
    limit = unrooted_limit(params, d, eps)
    return float(abs(limit / (rooting_constant(params, d, with_phase) * exact) - 1))


def rooting_suite(n=10, seed=3, kappa=8 / 3, tolerance=1e-5):
    """[rooting-limit report, negative control without the branch phase]."""
    t0 = time.perf_counter()
    params = params_from_kappa(kappa)
    rng = run_rng(seed)
    divs = [random_divisor(rng, rooted=True) for _ in range(n)]
    worst = max(rooting_error(params, d) for d in divs)
    broken = max(rooting_error(params, d, with_phase=False) for d in divs)
    wall = time.perf_counter() - t0
    return [McReport("rooting", n, worst, 0.0, 0.0, tolerance, seed, wall),
            McReport("rooting/no-phase", n, broken, 0.0, 0.0, tolerance, seed, wall,
                     expect_fail=True)]


def bpz_cases(params):
    """(label, family, test points, tip) for the hat fields checked against BPZ-Cardy."""
    cases = [
        ("hat_phi", hat_phi_family(params), [(0.3 + 1j,), (-0.6 + 0.4j,)], 0.1),
        ("vertex_boundary_pair", hat_vertex_family(params, [0.4, -0.4], [0, 0]),
         [(0.3 + 1j, -0.4 + 0.6j)], 0.1),
        ("vertex_bulk", hat_vertex_family(params, [0.3, 0.2], [-0.1, -0.4]),
         [(0.3 + 1j, -0.4 + 0.6j)], -0.2),
    ]
    if abs(params.kappa - 8 / 3) < 1e-12:
        cases.append(("hat_T", hat_T_family(params), [(0.3 + 1j,)], 0.1))
    return cases


def bpz_convergence(params, family, pts, xi, steps=BPZ_STEPS):
    """Residuals at the given tip steps and the successive ratios."""
    res = [bpz_cardy_residual(params, family, pts, xi, tip_step=h) for h in steps]
    ratios = [r0 / r1 for r0, r1 in zip(res[:-1], res[1:])]
    return res, ratios


def bpz_suite(kappas=BPZ_KAPPAS, tolerance=1e-5):
    """[worst residual at the default step, negative control with b shifted by 0.1].

    A case whose step-halving ratios are not near 4 counts as a failure.
    """
    t0 = time.perf_counter()
    worst = 0.0
    cases = {}
    for k in kappas:
        params = params_from_kappa(k)
        for label, fam, pts, xi in bpz_cases(params):
            r = bpz_cardy_residual(params, fam, pts, xi)
            res, ratios = bpz_convergence(params, fam, pts, xi)
            second_order = all(3.0 < q < 5.0 for q in ratios) or max(res) < 1e-9
            cases[f"{label}/kappa={k:.6g}"] = {"residual": r, "ratios": ratios,
                                               "second_order": bool(second_order)}
            worst = max(worst, r if second_order else np.inf)
    broken = 0.0
    for k in kappas:
        params = params_from_kappa(k)
        shifted = dataclasses.replace(params, b=params.b + 0.1)
        broken = max(broken, bpz_cardy_residual(params, hat_phi_family(shifted),
                                                [(0.3 + 1j,)], 0.1))
    wall = time.perf_counter() - t0
    return [McReport("bpz-cardy", len(cases), worst, 0.0, 0.0, tolerance, 0, wall,
                     {"cases": cases}),
            McReport("bpz-cardy/shifted-b", len(kappas), broken, 0.0, 0.0, tolerance, 0, wall,
                     expect_fail=True)]


def swallow_time_suite(heights=(0.5, 1.0, 2.0), dt=1e-4, tolerance=1e-4):
    """Zero driving: tau(i y) against -2 log cos(y/2), relative error.

    The negative control compares with the half-plane formula -log cos(y/2)
    (capacity counted once instead of twice).
    """
    t0 = time.perf_counter()
    worst = broken = 0.0
    for y in heights:
        exact = -2 * np.log(np.cos(y / 2))
        ev = evolve_strip(constant_driving(dt, exact + 0.5), [1j * y], ODE_RK4)
        worst = max(worst, abs(ev.tau[0] - exact) / exact)
        broken = max(broken, abs(ev.tau[0] - exact / 2) / (exact / 2))
    wall = time.perf_counter() - t0
    return [McReport("swallow-time", len(heights), float(worst), 0.0, 0.0, tolerance, 0, wall),
            McReport("swallow-time/halved", len(heights), float(broken), 0.0, 0.0, tolerance, 0,
                     wall, expect_fail=True)]


def slit_grid(n_x=7, n_y=6):
    # offset so no node lies on the slit Re z = 0
    return np.array([x + 1j * y for x in np.linspace(-3.05, 2.95, n_x)
                     for y in np.linspace(0.2, 3.0, n_y)])


def zero_driving_suite(t=0.5, dt=1e-3, tolerance=1e-6):
    """Both integrators with xi = 0 against the closed-form slit map."""
    t0 = time.perf_counter()
    g = slit_grid()
    exact = strip_slit_map(t, g)
    out = []
    for method in ("rk4", "zipper"):
        ev = evolve_strip(constant_driving(dt, t), g, method)
        err = float(np.abs(ev.w - exact).max())
        out.append(McReport(f"zero-driving/{method}", len(g), err, 0.0, 0.0, tolerance, 0,
                            time.perf_counter() - t0))
    # negative control: the slit map one step too long
    err = float(np.abs(ev.w - strip_slit_map(t + dt, g)).max())
    out.append(McReport("zero-driving/extra-step", len(g), err, 0.0, 0.0, tolerance, 0,
                        time.perf_counter() - t0, expect_fail=True))
    return out


def capacity_suite(eps=0.05, tolerance=1e-6):
    """Small-slit asymptotics of scap, and additivity under composition.

    The negative control drops the sqrt(2) from the slit height.
    """
    t0 = time.perf_counter()
    ratio = scap_vertical_slit(np.sqrt(2) * eps) / (0.5 * eps * eps)
    small = McReport("capacity/small-slit-ratio", 1, float(ratio), 0.0, 1.0, 0.01, 0,
                     time.perf_counter() - t0)
    wrong = scap_vertical_slit(eps) / (0.5 * eps * eps)
    control = McReport("capacity/height-without-sqrt2", 1, float(wrong), 0.0, 1.0, 0.01, 0,
                       time.perf_counter() - t0, expect_fail=True)
    s1, s2 = SlitMapSpec(0.4, 0.7), SlitMapSpec(-0.8, 1.1)
    both = compose(lambda z: psi_slit(s2, z), lambda z: psi_slit(s1, z))
    err = abs(scap_numeric(both) - (s1.capacity + s2.capacity))
    add = McReport("capacity/additivity", 2, float(err), 0.0, 0.0, tolerance, 0,
                   time.perf_counter() - t0)
    return [small, add, control]


__all__ = [
    "random_divisor", "random_mobius_param", "mobius_error", "mobius_suite",
    "rooting_constant", "unrooted_limit", "rooting_error", "rooting_suite", "bpz_cases",
    "bpz_convergence", "bpz_suite", "swallow_time_suite", "zero_driving_suite",
    "capacity_suite", "slit_grid",
]
