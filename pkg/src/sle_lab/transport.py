"""Chart-change laws, Lie derivatives and BPZ-Cardy residuals.

A non-random field M is described by its value in one chart and its
conformal type, which says how the value changes under a chart change h:

    differential [l, l*]:    (h')^l conj(h')^l* M~(h)   (times root factors)
    pre-pre-Schwarzian mu:    M~(h) + mu log h'            (or 2 Re of it)
    pre-Schwarzian mu:        h' M~(h) + mu h''/h'
    Schwarzian mu:            h'^2 M~(h) + mu S_h
"""
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cft import SleParams, hat_phi_expectation, hat_rooted_corr, hat_T_expectation
from .conformal import HALFPLANE, CriticalPointError, DomainChart, DomainError

SPATIAL_STEP = 1e-5
TIP_STEP = 1e-4


@dataclass(frozen=True)
class ConformalType:
    """Transformation law of one point variable.

    kind: "differential" (lam, lam_star), "prepre" (mu, real_part),
    "pre" (mu) or "schwarzian" (mu).  boundary_dims are the dimensions at
    q-, q+ and only enter differentials.
    """
    kind: str = "differential"
    lam: complex = 0.0
    lam_star: complex = 0.0
    mu: complex = 0.0
    real_part: bool = False
    boundary_dims: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("differential", "prepre", "pre", "schwarzian"):
            raise ValueError(f"unknown conformal type {self.kind!r}")
        if self.kind != "differential" and any(self.boundary_dims):
            raise ValueError("boundary dimensions only make sense for differentials")


SCALAR = ConformalType()


def differential(lam, lam_star=0.0, boundary_dims=(0.0, 0.0)):
    return ConformalType("differential", lam=lam, lam_star=lam_star, boundary_dims=boundary_dims)


@dataclass(frozen=True)
class MapData:
    """Local data of a chart change h at one point."""
    dh: complex
    d2h: complex = 0j
    schwarzian: complex = 0j
    log_dh: complex = None

    @property
    def log_derivative(self):
        return np.log(self.dh) if self.log_dh is None else self.log_dh


def transport(value, ctype: ConformalType, hmap: MapData, boundary_derivs=(1.0, 1.0)):
    """Value in the chart phi from the value M~(h(z)) in the chart phi~ = phi o h^{-1}."""
    if hmap.dh == 0:
        raise CriticalPointError("h'(z) = 0")
    k = ctype.kind
    if k == "differential":
        ld = hmap.log_derivative
        out = value * np.exp(ctype.lam * ld + ctype.lam_star * np.conj(ld))
        hm, hp = ctype.boundary_dims
        if hm or hp:
            out = out * boundary_derivs[0] ** hm * boundary_derivs[1] ** hp
        return out
    if k == "prepre":
        term = ctype.mu * hmap.log_derivative
        return value + (2 * np.real(term) if ctype.real_part else term)
    if k == "pre":
        return hmap.dh * value + ctype.mu * hmap.d2h / hmap.dh
    return hmap.dh ** 2 * value + ctype.mu * hmap.schwarzian


# ---------------------------------------------------------------------------
# Loewner vector field

@dataclass(frozen=True)
class VectorField:
    """A holomorphic vector field with closed-form derivatives up to third order."""
    derivs: Callable  # z -> (v, v', v'', v''')

    def __call__(self, z):
        return self.derivs(z)[0]

    def __add__(self, other):
        return VectorField(lambda z: tuple(a + b for a, b in zip(self.derivs(z), other.derivs(z))))

    def scaled(self, c):
        return VectorField(lambda z: tuple(c * a for a in self.derivs(z)))


def _halfplane_field(xi):
    # (1 - z^2)(1 - xi z) / (2 (xi - z)) = [(1 - xi^2)^2 / (xi - z) - q(z)] / 2
    r = (1 - xi * xi) ** 2

    def derivs(z):
        z = np.asarray(z, dtype=complex)
        if np.any(z == xi):
            raise DomainError("vector field pole at the tip")
        d = xi - z
        q = xi * z * z + (xi * xi - 1) * z + xi ** 3 - 2 * xi
        v = 0.5 * (r / d - q)
        v1 = 0.5 * (r / d ** 2 - (2 * xi * z + xi * xi - 1))
        v2 = 0.5 * (2 * r / d ** 3 - 2 * xi)
        v3 = 3 * r / d ** 4
        return v, v1, v2, v3
    return derivs


def _strip_field(x):
    # 1/2 coth((x - z)/2)
    def derivs(z):
        z = np.asarray(z, dtype=complex)
        if np.any(z == x):
            raise DomainError("vector field pole at the tip")
        u = (x - z) / 2
        coth = 1 / np.tanh(u)
        csch2 = 1 / np.sinh(u) ** 2
        v = 0.5 * coth
        v1 = 0.25 * csch2
        v2 = 0.25 * csch2 * coth
        v3 = 0.25 * (csch2 * coth * coth + 0.5 * csch2 * csch2)
        return v, v1, v2, v3
    return derivs


def loewner_vector_field(xi, z=None, chart: DomainChart = HALFPLANE):
    """v_xi in the chart.  With z, returns v_xi(z); otherwise the VectorField."""
    xi = float(xi)
    field_ = VectorField(_halfplane_field(xi) if chart.kind == "halfplane" else _strip_field(xi))
    if z is None:
        return field_
    return field_(z)


# ---------------------------------------------------------------------------
# observables and Lie derivatives

@dataclass(frozen=True)
class Observable:
    """A non-random field of several point variables.

    eval: array of points -> complex; ctypes: one ConformalType per point.
    eval must be pure.
    """
    eval: Callable
    ctypes: Sequence
    params: SleParams = None
    name: str = ""

    def __call__(self, points):
        return self.eval(np.asarray(points, dtype=complex))


def constant_observable(value, n_points=1):
    return Observable(lambda pts: value + 0j, (SCALAR,) * n_points, name="constant")


def _partials(f, pts, j, step):
    h = step * max(1.0, abs(pts[j]))
    e = np.zeros(len(pts), dtype=complex)
    e[j] = h
    fx = (f(pts + e) - f(pts - e)) / (2 * h)
    fy = (f(pts + 1j * e) - f(pts - 1j * e)) / (2 * h)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


def lie_derivative(obs: Observable, v: VectorField, points, step=SPATIAL_STEP):
    """L_v X at the given points; q+- are not acted on."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    f = obs.eval
    value = f(pts)
    total = 0j
    for j, ct in enumerate(obs.ctypes):
        vv, v1, v2, v3 = (complex(t) for t in v.derivs(pts[j]))
        d, db = _partials(f, pts, j, step)
        total += vv * d + np.conj(vv) * db
        if ct.kind == "differential":
            total += (ct.lam * v1 + ct.lam_star * np.conj(v1)) * value
        elif ct.kind == "prepre":
            term = ct.mu * v1
            total += 2 * np.real(term) if ct.real_part else term
        elif ct.kind == "pre":
            total += v1 * value + ct.mu * v2
        else:
            total += 2 * v1 * value + ct.mu * v3
    return total


# ---------------------------------------------------------------------------
# BPZ-Cardy

def cardy_operator(params: SleParams, family: Callable, xi, step=TIP_STEP):
    """(1/2a^2)[(1 - xi^2)^2/2 d^2/dxi^2 - xi (1 - xi^2) d/dxi] family(xi)."""
    f0 = family(xi)
    fp = family(xi + step)
    fm = family(xi - step)
    d1 = (fp - fm) / (2 * step)
    d2 = (fp - 2 * f0 + fm) / step ** 2
    one = 1 - xi * xi
    return (0.5 * one * one * d2 - xi * one * d1) / (2 * params.a ** 2)


def bpz_cardy_residual(params: SleParams, obs_family: Callable, test_points, xi,
                       tip_step=TIP_STEP, spatial_step=SPATIAL_STEP, extra_dim=0.0):
    """|E-hat_xi[L_{v_xi} X] + extra_dim E-hat_xi[X] - Cardy operator|, max over test points.

    obs_family(xi) returns the Observable of the hat correlator with tip xi in
    the identity chart of (H, -1, 1).  test_points is a sequence of point
    tuples (one tuple per configuration).
    """
    xi = float(xi)
    worst = 0.0
    v = loewner_vector_field(xi)
    for pts in test_points:
        pts = np.atleast_1d(np.asarray(pts, dtype=complex))
        obs = obs_family(xi)
        lhs = lie_derivative(obs, v, pts, spatial_step) + extra_dim * obs(pts)
        rhs = cardy_operator(params, lambda s: obs_family(s)(pts), xi, tip_step)
        worst = max(worst, float(abs(lhs - rhs)))
    return worst


def hat_phi_family(params: SleParams):
    ct = ConformalType("prepre", mu=1j * params.b, real_part=True)

    def family(xi):
        chart = HALFPLANE.with_tip(xi)
        return Observable(lambda p: complex(hat_phi_expectation(params, p[0], chart)), (ct,),
                          params, "hat_phi")
    return family


def hat_T_family(params: SleParams):
    ct = ConformalType("schwarzian", mu=params.c / 12)

    def family(xi):
        chart = HALFPLANE.with_tip(xi)
        return Observable(lambda p: complex(hat_T_expectation(params, p[0], chart)), (ct,),
                          params, "hat_T")
    return family


def hat_vertex_family(params: SleParams, sigma, sigma_star, roots=(0.0, 0.0)):
    """xi -> E-hat_xi[O^{(sigma, sigma*; roots)}] as an Observable of len(sigma) points."""
    from .cft import Divisor

    b = params.b
    ctypes = tuple(differential(s * s / 2 - s * b, ss * ss / 2 - ss * b)
                   for s, ss in zip(sigma, sigma_star))

    def family(xi):
        chart = HALFPLANE.with_tip(xi)

        def ev(p):
            d = Divisor(tuple(zip(p, sigma, sigma_star)), roots[0], roots[1])
            return hat_rooted_corr(params, d, chart=chart)
        return Observable(ev, ctypes, params, "hat_vertex")
    return family


def bpz_cardy_rooted_residual(params: SleParams, sigma, sigma_star, roots, points, xi,
                              tip_step=TIP_STEP, spatial_step=SPATIAL_STEP):
    """BPZ-Cardy residual of a rooted hat vertex correlator.

    The vector field does not act at q+-; their hat dimensions enter as the
    extra term (h^-_hat + h^+_hat) E-hat[O].
    """
    a = params.a
    hm = roots[0] ** 2 / 2 - roots[0] * a / 2
    hp = roots[1] ** 2 / 2 - roots[1] * a / 2
    if len(sigma) == 0:
        return 0.0
    family = hat_vertex_family(params, sigma, sigma_star, roots)
    return bpz_cardy_residual(params, family, [points], xi, tip_step, spatial_step,
                              extra_dim=hm + hp)


# ---------------------------------------------------------------------------
# flow of a vector field (oracle for Lie derivatives)

def flow_jet(v: VectorField, z, t, n_steps=64):
    """(psi_t, psi_t', psi_t'', psi_t''') of the flow of v, by RK4 on the variational system."""
    def rhs(y):
        p, d1, d2, d3 = y
        vv, v1, v2, v3 = (complex(q) for q in v.derivs(p))
        return np.array([vv, v1 * d1, v2 * d1 * d1 + v1 * d2,
                         v3 * d1 ** 3 + 3 * v2 * d1 * d2 + v1 * d3])
    y = np.array([complex(z), 1, 0, 0], dtype=complex)
    h = t / n_steps
    for _ in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return tuple(y)


def flow_lie_derivative(value_fn, ctype: ConformalType, v: VectorField, z, dt=1e-3):
    """d/dt at 0 of transport(value_fn(psi_t(z)), ctype, psi_t): single-point oracle."""
    from .conformal import schwarzian_from_derivatives

    def transported(t):
        p, d1, d2, d3 = flow_jet(v, z, t)
        s = schwarzian_from_derivatives(d1, d2, d3) if ctype.kind == "schwarzian" else 0j
        return transport(value_fn(p), ctype, MapData(d1, d2, s))
    return (transported(dt) - transported(-dt)) / (2 * dt)
