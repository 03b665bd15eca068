"""Closed-form observables: the Cardy-Zhan triangle map, swallowing and side
probabilities, the endpoint law, the restriction formula and the restriction
martingale, plus packaged martingale-observables for the drift harness.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from ._backend import kernels
from .cft import Divisor, SleParams, hat_phi_expectation, hat_rooted_corr, params_from_kappa
from .cft import hat_T_expectation
from .conformal import STRIP, SlitMapSpec, psi_slit_derivative, scap_numeric, slit_height
from .loewner import DrivingPath, step_centers

RESTRICTION_LAMBDA = 5 / 8
RESTRICTION_MU = 5 / 96
QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=200)


# ---------------------------------------------------------------------------
# Cardy-Zhan map

class CardyZhanMap:
    """Conformal map of (S, 0, -inf, +inf) onto the isosceles triangle with
    base angles 2 pi/kappa, normalized by M(-inf) = 0, M(+inf) = 1 and
    Im M(0) > 0.

    The holomorphic map F = int sinh^{-4/kappa}(zeta/2) d zeta / I has
    Im F(0) < 0 (orientation), so M is its mirror image conj(F).  Ratios
    Im M / Im M(0) and Re M are unchanged by the mirror.
    """

    def __init__(self, kappa):
        self.kappa = float(kappa)
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        self.p = 4 / self.kappa
        p = self.p
        # top-line normalization: I = i^{-p} J,  J = int cosh^{-p}(x/2) dx = 2 B(p/2, 1/2)
        self.J = 2 * special.beta(p / 2, 0.5)
        self.I = np.exp(-0.5j * np.pi * p) * self.J
        if p < 1:
            F0 = np.exp(-0.5j * np.pi * p) / (2 * np.cos(0.5 * np.pi * p))
            self.M0 = complex(np.conj(F0))
        else:
            self.M0 = None

    def _power(self, zeta):
        # sinh^{-p}(zeta/2), principal branch: sinh(zeta/2) lies in closed H on S
        s = np.sinh(zeta / 2)
        if s.imag == 0 and s.real < 0:
            s = complex(s.real, 0.0)
            return np.abs(s) ** (-self.p) * np.exp(-1j * np.pi * self.p)
        return s ** (-self.p)

    def endpoint_cdf(self, x):
        return endpoint_cdf(self.kappa, x)

    def _F_top(self, x):
        return complex(endpoint_cdf(self.kappa, x))

    def _F_vertical(self, z):
        """F(z) from the top-line value by a vertical segment."""
        x, y = z.real, z.imag
        if y == np.pi:
            return self._F_top(x)
        # complex_func quad ignores reversed limits, so integrate upward and negate
        val, _ = integrate.quad(lambda s: self._power(complex(x, s)) * 1j, y, np.pi,
                                complex_func=True, **QUAD_OPTS)
        return self._F_top(x) - val / self.I

    def _F_from_zero(self, z):
        """F(z) = F(0) + int_0^z, singular endpoint removed by zeta = z s^{1/(1-p)}."""
        if self.p >= 1:
            raise ValueError("F(0) is infinite for kappa <= 4")
        q = 1 / (1 - self.p)

        def f(s):
            if s == 0:
                # sinh(u/2) ~ u/2 cancels the s^{q-1} factor exactly
                return q * (z / 2) ** (-self.p) * z
            u = z * s ** q
            return self._power(u) * z * q * s ** (q - 1)
        val, _ = integrate.quad(f, 0.0, 1.0, complex_func=True, **QUAD_OPTS)
        return np.conj(self.M0) + val / self.I

    def holomorphic(self, z, route="auto"):
        z = complex(z)
        if not -1e-15 <= z.imag <= np.pi + 1e-15:
            raise ValueError("point outside the closed strip")
        if np.isinf(z.real):
            return 0j if z.real < 0 else 1 + 0j
        if z == 0:
            if self.M0 is None:
                raise ValueError("M(0) diverges for kappa <= 4")
            return np.conj(self.M0)
        if route == "zero" or (route == "auto" and self.p < 1 and abs(z) < 1.0):
            return self._F_from_zero(z)
        if z.real == 0 and z.imag == 0:
            raise ValueError("integrand singular at 0")
        return self._F_vertical(z)

    def __call__(self, z, route="auto"):
        return complex(np.conj(self.holomorphic(z, route)))


@lru_cache(maxsize=32)
def _cz(kappa):
    return CardyZhanMap(kappa)


def cardy_zhan_map(kappa, z, route="auto"):
    return _cz(float(kappa))(z, route)


def swallow_prob(kappa, z):
    """P(tau_z < inf) = Im M(z) / Im M(0), kappa > 4."""
    if not kappa > 4:
        raise ValueError("points are swallowed only for kappa > 4")
    cz = _cz(float(kappa))
    return float(cz(z).imag / cz.M0.imag)


def right_prob(kappa, z):
    """P(z lies to the right of the curve) = Re M - Im M / (2 Im M(0))."""
    cz = _cz(float(kappa))
    m = cz(z)
    if cz.M0 is None:
        return float(m.real)
    return float(m.real - 0.5 * m.imag / cz.M0.imag)


def left_prob(kappa, z):
    if kappa > 4:
        return 1.0 - right_prob(kappa, z) - swallow_prob(kappa, z)
    return 1.0 - right_prob(kappa, z)


def endpoint_cdf(kappa, x, method="beta"):
    """P(Re gamma(inf) <= x): normalized int_{-inf}^x cosh^{-4/kappa}(s/2) ds.

    method "beta" uses the regularized incomplete beta function,
    method "quad" integrates numerically; the two are independent routes.
    """
    p = 4 / float(kappa)
    x = float(x)
    if np.isinf(x):
        return 1.0 if x > 0 else 0.0
    if method == "beta":
        half = 0.5 * special.betainc(0.5, p / 2, np.tanh(abs(x) / 2) ** 2)
        return float(0.5 + np.sign(x) * half)
    J = 2 * special.beta(p / 2, 0.5)
    f = lambda s: np.exp(-p * (abs(s) / 2 + np.log1p(np.exp(-abs(s))) - np.log(2)))
    if x <= 0:
        val, _ = integrate.quad(f, -np.inf, x, **QUAD_OPTS)
        return float(val / J)
    val, _ = integrate.quad(f, x, np.inf, **QUAD_OPTS)
    return float(1 - val / J)


# ---------------------------------------------------------------------------
# restriction

def restriction_prob(hull, lam=RESTRICTION_LAMBDA, mu=RESTRICTION_MU):
    """psi_K'(0)^lam exp(-2 mu scap K) for a slit spec or a normalized map psi_K."""
    if isinstance(hull, SlitMapSpec):
        if hull.base == 0:
            raise ValueError("the hull touches the starting point")
        d = float(np.real(psi_slit_derivative(hull, 0j)))
        cap = hull.capacity
    else:
        h = 1e-5
        d = float(np.real((hull(complex(h)) - hull(complex(-h))) / (2 * h)))
        cap = scap_numeric(hull)
    return float(d ** lam * np.exp(-2 * mu * cap))


def slit_polyline(spec: SlitMapSpec, m=64):
    """Vertical slit as a polyline: real base followed by m points up to the tip."""
    return spec.base + 1j * spec.height * np.linspace(0.0, 1.0, m + 1)


def hull_martingale(P, xi, lam, mu, sub=4):
    """M = h'(xi)^lam exp(-2 mu scap) for the hull bounded by the polyline P."""
    cap, logd = kernels.polyline_zipper(np.ascontiguousarray(P, dtype=complex), float(xi), int(sub))
    return float(np.exp(lam * logd - 2 * mu * cap))


@dataclass
class RestrictionSeries:
    times: np.ndarray
    values: np.ndarray
    hit: bool
    hit_time: float


def restriction_process(driving: DrivingPath, spec: SlitMapSpec, lam=RESTRICTION_LAMBDA,
                        mu=RESTRICTION_MU, m=64, every=1, sub=4) -> RestrictionSeries:
    """M_t along a fixed driving path, sampled every `every` steps.

    The image g_t(K) is tracked as a polyline through the zipper; a step whose
    slit crosses the polyline is a hit and the series ends there with M = 0.
    """
    P = slit_polyline(spec, m)
    c, h = step_centers(driving)
    x = driving.strip_driving()
    times = [0.0]
    vals = [hull_martingale(P, x[0], lam, mu, sub)]
    for k in range(driving.n_steps):
        crossing = _lowest_crossing(P, c[k])
        if crossing <= slit_height(h[k]):
            times.append(driving.times[k + 1])
            vals.append(0.0)
            return RestrictionSeries(np.array(times), np.array(vals), True, driving.times[k + 1])
        r, _ = kernels.slit_step(P - c[k], h[k])
        P = c[k] + r
        P[0] = P[0].real
        if (k + 1) % every == 0 or k == driving.n_steps - 1:
            times.append(driving.times[k + 1])
            vals.append(hull_martingale(P, x[k + 1], lam, mu, sub))
    return RestrictionSeries(np.array(times), np.array(vals), False, np.nan)


def _lowest_crossing(P, c):
    ra = P[:-1].real - c
    rb = P[1:].real - c
    mask = (ra * rb <= 0) & (ra != rb)
    if not mask.any():
        return np.inf
    lam = ra[mask] / (ra[mask] - rb[mask])
    return float((P[:-1][mask].imag + lam * (P[1:][mask].imag - P[:-1][mask].imag)).min())


# ---------------------------------------------------------------------------
# martingale-observables in uniformized coordinates

@dataclass(frozen=True)
class MartingaleObservable:
    """M_t(z) from the state of the flow at z.

    value(X, log_dw, t, xi): X = w_t(z) - xi_t, log_dw = log w_t'(z).
    """
    kind: str
    params: SleParams
    divisor: Divisor = None
    b_override: float = None

    def _b(self):
        return self.params.b if self.b_override is None else self.b_override

    def value(self, X, log_dw, t=0.0, xi=0.0):
        X = np.asarray(X, dtype=complex)
        log_dw = np.asarray(log_dw, dtype=complex)
        if self.kind == "constant":
            return np.ones(X.shape)
        if self.kind == "hat_phi":
            # pre-pre-Schwarzian real part of order ib: + 2 Re(ib log w')
            return hat_phi_expectation(self.params, X, STRIP) - 2 * self._b() * log_dw.imag
        if self.kind == "hat_T":
            return hat_T_expectation(self.params, X, STRIP) * np.exp(2 * log_dw)
        if self.kind == "vertex":
            # X, log_dw: (..., n) for the n divisor points
            d = self.divisor
            a, b = self.params.a, self.params.b
            sm, sp = d.root_minus, d.root_plus
            hm, hp = sm * sm / 2 - sm * a / 2, sp * sp / 2 - sp * a / 2
            h = d.sigma ** 2 / 2 - d.sigma * b
            hs = d.sigma_star ** 2 / 2 - d.sigma_star * b
            t = np.broadcast_to(np.asarray(t, dtype=float), X.shape[:-1])
            xi = np.broadcast_to(np.asarray(xi, dtype=float), X.shape[:-1])
            out = np.empty(X.shape[:-1], dtype=complex)
            for idx in np.ndindex(out.shape):
                moved = Divisor(tuple(zip(X[idx], d.sigma, d.sigma_star)), sm, sp)
                log_cov = np.sum(h * log_dw[idx] + hs * np.conj(log_dw[idx]))
                log_cov += hm * (-t[idx] - xi[idx]) + hp * (-t[idx] + xi[idx])
                out[idx] = hat_rooted_corr(self.params, moved, chart=STRIP) * np.exp(log_cov)
            return out[()] if out.ndim == 0 else out
        raise ValueError(f"unknown observable kind {self.kind!r}")

    def initial(self, z):
        z = np.asarray(z, dtype=complex)
        return self.value(z, np.zeros_like(z))


def martingale_observable(kind, params: SleParams, divisor: Divisor = None,
                          b_override=None) -> MartingaleObservable:
    """Package a one-point hat field or a rooted vertex divisor for the drift harness.

    kind: "hat_phi", "hat_T" (kappa = 8/3 only), "vertex" (neutral divisor
    with roots; its points are placeholders), or "constant".
    """
    if kind == "hat_T" and abs(params.kappa - 8 / 3) > 1e-12:
        raise ValueError("the hat_T martingale is only set up at kappa = 8/3")
    if kind == "vertex":
        if divisor is None:
            raise ValueError("vertex observables need a divisor")
        from .cft import check_neutrality
        if not check_neutrality(divisor):
            raise ValueError("vertex observable divisor must be neutral")
    return MartingaleObservable(kind, params, divisor, b_override)


__all__ = [
    "CardyZhanMap", "cardy_zhan_map", "swallow_prob", "right_prob", "left_prob",
    "endpoint_cdf", "restriction_prob", "restriction_process", "RestrictionSeries",
    "hull_martingale", "slit_polyline", "martingale_observable", "MartingaleObservable",
    "RESTRICTION_LAMBDA", "RESTRICTION_MU", "params_from_kappa",
]
