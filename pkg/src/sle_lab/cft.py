"""Parameters and closed-form correlators of the vertex-field family.

Correlators are evaluated in normalized coordinates w = chart.normalize(z),
which sends the chart to (H, 0, -1, 1) with the tip at 0.  All logarithms
are taken on a branch that is exactly covariant under the automorphisms
h(w) = (a w + 1)/(w + a) of (H, -1, 1):

    log(u - v) = Log R(u, v) + Log(u + 1) + Log(v + 1),
    R(u, v)   = (u - v) / ((u + 1)(v + 1)),

since R scales by the positive constant (a - 1)/(a + 1) under h.  Log puts
the negative real axis at +i pi (the limit from H).  The factor (1 - w) is
the same rule with v = +1 (and a sign), (1 + w) is Log(1 + w).
"""
from dataclasses import dataclass
from math import sqrt

import numpy as np

from .conformal import HALFPLANE, STRIP, DomainChart

NEUTRALITY_TOL = 1e-12


class NeutralityError(ValueError):
    pass


class BranchCutError(ValueError):
    """A configuration sits on the cut of a complex power."""


# ---------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class SleParams:
    kappa: float
    a: float
    b: float
    c: float
    h: float
    h_0_half: float

    @property
    def lam(self):
        """Boundary exponent of the restriction martingale (equals h)."""
        return self.h

    @property
    def mu(self):
        """Capacity exponent of the restriction martingale (equals h_{0,1/2})."""
        return self.h_0_half

    def as_dict(self):
        return {
            "kappa": self.kappa, "a": self.a, "b": self.b, "c": self.c,
            "h": self.h, "lambda": self.lam, "mu": self.mu,
            "h_0_half": self.h_0_half,
        }


def params_from_kappa(kappa) -> SleParams:
    kappa = float(kappa)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    a = sqrt(2 / kappa)
    b = sqrt(kappa / 8) - a
    c = (3 * kappa - 8) * (6 - kappa) / (2 * kappa)
    h = (6 - kappa) / (2 * kappa)
    h0 = (kappa - 2) * (6 - kappa) / (16 * kappa)
    return SleParams(kappa, a, b, c, h, h0)


# ---------------------------------------------------------------------------
# divisors

@dataclass(frozen=True)
class Divisor:
    """Charges (sigma, sigma*) at finitely many points plus roots at q-, q+.

    entries: tuple of (point, sigma, sigma_star).  Boundary points (real in
    the chart) may only carry sigma_star = 0.
    """
    entries: tuple = ()
    root_minus: float = 0.0
    root_plus: float = 0.0

    def __post_init__(self):
        norm = tuple((complex(p), float(s), float(ss)) for p, s, ss in self.entries)
        object.__setattr__(self, "entries", norm)
        pts = [p for p, _, _ in norm]
        if len(set(pts)) != len(pts):
            raise ValueError("divisor points must be distinct")

    @property
    def neutrality_sum(self):
        return self.root_minus + self.root_plus + sum(s + ss for _, s, ss in self.entries)

    @property
    def points(self):
        return np.array([p for p, _, _ in self.entries], dtype=complex)

    @property
    def sigma(self):
        return np.array([s for _, s, _ in self.entries])

    @property
    def sigma_star(self):
        return np.array([ss for _, _, ss in self.entries])

    @property
    def is_rooted(self):
        return self.root_minus != 0 or self.root_plus != 0

    def __add__(self, other):
        """Star product: charges add pointwise, roots add."""
        acc = {}
        for p, s, ss in self.entries + other.entries:
            s0, ss0 = acc.get(p, (0.0, 0.0))
            acc[p] = (s0 + s, ss0 + ss)
        return Divisor(tuple((p, s, ss) for p, (s, ss) in acc.items()),
                       self.root_minus + other.root_minus,
                       self.root_plus + other.root_plus)

    def swap_chirality(self):
        """Swap sigma with sigma* at every point.

        The correlator of the swapped divisor is the conjugate of the original
        times exp(i pi sum sigma_j sigma_j*), the phase of (w - wbar)^{sigma sigma*}.
        """
        return Divisor(tuple((p, ss, s) for p, s, ss in self.entries),
                       self.root_minus, self.root_plus)


def psi_divisor(params: SleParams, point) -> Divisor:
    """The boundary-condition-changing field: charge a at the point, -a/2 at q+-."""
    return Divisor(((point, params.a, 0.0),), -params.a / 2, -params.a / 2)


@dataclass(frozen=True)
class Neutrality:
    passed: bool
    total: float

    def __bool__(self):
        return self.passed


def check_neutrality(d: Divisor) -> Neutrality:
    s = d.neutrality_sum
    return Neutrality(bool(abs(s) < NEUTRALITY_TOL), float(s))


def _require_neutral(d):
    res = check_neutrality(d)
    if not res:
        raise NeutralityError(f"divisor is not neutral (total charge {res.total:.3g})")


@dataclass(frozen=True)
class VertexDims:
    h: tuple
    h_star: tuple
    h_minus: float
    h_plus: float
    hat: bool = False


def vertex_dims(params: SleParams, d: Divisor, hat=False) -> VertexDims:
    b, a = params.b, params.a
    h = tuple(s * s / 2 - s * b for s in d.sigma)
    hs = tuple(s * s / 2 - s * b for s in d.sigma_star)

    def root(s):
        return s * s / 2 - s * a / 2 if hat else s * s / 2

    return VertexDims(h, hs, root(d.root_minus), root(d.root_plus), hat)


# ---------------------------------------------------------------------------
# covariant logarithms

def _logp(x):
    """Principal Log with the negative real axis sent to +i pi."""
    x = np.asarray(x, dtype=complex)
    out = np.log(x)
    cut = (x.imag == 0) & (x.real < 0)
    if np.any(cut):
        out = np.where(cut, out.real + 1j * np.pi, out)
    return out


def log_difference(u, v, interior_check=True):
    """Covariant branch of log(u - v) for u, v in closed H or closed lower H."""
    u = complex(u)
    v = complex(v)
    if u == v:
        raise BranchCutError("coincident points")
    if v == -1:
        return complex(_logp(u + 1))
    if u == -1:
        return complex(_logp(-1 - v))
    R = (u - v) / ((u + 1) * (v + 1))
    if interior_check and R.imag == 0 and R.real < 0 and (u.imag != 0 and v.imag != 0):
        raise BranchCutError("pair of interior points on the branch cut")
    return complex(_logp(R) + _logp(u + 1) + _logp(v + 1))


def log_one_minus(w):
    """Covariant branch of log(1 - w); principal-real on (-1, 1)."""
    w = complex(w)
    if w == 1:
        raise BranchCutError("point at q+")
    if w == -1:
        return complex(np.log(2.0))
    if w.imag < 0:
        return complex(np.conj(log_one_minus(w.conjugate())))
    return log_difference(w, 1.0) - 1j * np.pi


def log_one_plus(w):
    w = complex(w)
    if w == -1:
        raise BranchCutError("point at q-")
    if w.imag < 0:
        return complex(np.conj(_logp(1 + w.conjugate())))
    return complex(_logp(1 + w))


def log_w(w):
    """Branch of log w continuous on H (negative reals at +i pi)."""
    w = complex(w)
    if w == 0:
        raise BranchCutError("point at the tip")
    if w.imag < 0:
        return complex(np.conj(_logp(w.conjugate())))
    return complex(_logp(w))


# ---------------------------------------------------------------------------
# correlators in normalized coordinates

def log_vertex_corr_w(params: SleParams, w, logdw, sigma, sigma_star,
                      roots=(0.0, 0.0), log_root_derivs=(0.0, 0.0), hat=False):
    """log E[O] (or log E-hat[O]) from normalized coordinates.

    w, logdw: arrays of w_j and log w'(z_j); log_root_derivs: (log w'(q-),
    log w'(q+)).  The hat version includes the w^{sigma a} factors and the
    shifted exponents.
    """
    a, b = params.a, params.b
    sm, sp = roots
    shift = b - a / 2 if hat else b
    total = 0j
    n = len(w)
    for j in range(n):
        wj, s, ss = complex(w[j]), float(sigma[j]), float(sigma_star[j])
        boundary = wj.imag == 0
        if boundary and ss != 0:
            raise ValueError("boundary insertions must have sigma_star = 0")
        ld = complex(logdw[j])
        h = s * s / 2 - s * b
        hs = ss * ss / 2 - ss * b
        total += h * ld + hs * np.conj(ld)
        total += s * (shift + sp) * log_one_minus(wj) + s * (shift + sm) * log_one_plus(wj)
        if ss:
            wb = wj.conjugate()
            total += ss * (shift + sp) * log_one_minus(wb) + ss * (shift + sm) * log_one_plus(wb)
            total += s * ss * log_difference(wj, wb)
        if hat:
            total += s * a * log_w(wj)
            if ss:
                total += ss * a * log_w(wj.conjugate())
    for j in range(n):
        for k in range(j + 1, n):
            wj, wk = complex(w[j]), complex(w[k])
            sj, sjs, sk, sks = sigma[j], sigma_star[j], sigma[k], sigma_star[k]
            if sj * sk:
                total += sj * sk * log_difference(wj, wk)
            if sj * sks:
                total += sj * sks * log_difference(wj, wk.conjugate())
            if sjs * sk:
                total += sjs * sk * log_difference(wj.conjugate(), wk)
            if sjs * sks:
                total += sjs * sks * np.conj(log_difference(wj, wk))
    if hat:
        hm, hp = sm * sm / 2 - sm * a / 2, sp * sp / 2 - sp * a / 2
    else:
        hm, hp = sm * sm / 2, sp * sp / 2
    total += hm * log_root_derivs[0] + hp * log_root_derivs[1]
    return complex(total)


def _chart_data(d: Divisor, chart: DomainChart):
    z = d.points
    if chart.kind == "strip":
        bad = (z.imag < 0) | (z.imag > np.pi)
    else:
        bad = z.imag < 0
    if np.any(bad):
        raise ValueError("divisor point outside the closed domain")
    w = chart.normalize(z) if len(z) else z
    ld = chart.log_dnormalize(z) if len(z) else z
    dm, dp = chart.root_derivatives()
    return w, ld, (np.log(dm), np.log(dp))


def multi_vertex_corr(params: SleParams, d: Divisor, chart: DomainChart = HALFPLANE):
    """E[prod O^{(sigma_j, sigma_j*)}(z_j)] for a neutral divisor without roots."""
    if d.is_rooted:
        raise ValueError("multi_vertex_corr takes a divisor without roots")
    _require_neutral(d)
    if not d.entries:
        return 1.0 + 0j
    w, ld, lr = _chart_data(d, chart)
    return complex(np.exp(log_vertex_corr_w(params, w, ld, d.sigma, d.sigma_star)))


def rooted_vertex_corr(params: SleParams, d: Divisor, chart: DomainChart = HALFPLANE):
    """E[O^{(sigma, sigma*; sigma-, sigma+)}], roots at the marked points."""
    _require_neutral(d)
    w, ld, lr = _chart_data(d, chart)
    return complex(np.exp(log_vertex_corr_w(params, w, ld, d.sigma, d.sigma_star,
                                            (d.root_minus, d.root_plus), lr)))


def _hat_chart(chart, tip):
    return chart.with_tip(tip) if tip is not None else chart


def hat_rooted_corr(params: SleParams, d: Divisor, tip=None, chart: DomainChart = HALFPLANE):
    """E-hat_tip[O]: the correlator under insertion of Psi(tip)/E[Psi(tip)]."""
    _require_neutral(d)
    ch = _hat_chart(chart, tip)
    w, ld, lr = _chart_data(d, ch)
    if np.any(w == 0):
        raise BranchCutError("a divisor point coincides with the tip")
    return complex(np.exp(log_vertex_corr_w(params, w, ld, d.sigma, d.sigma_star,
                                            (d.root_minus, d.root_plus), lr, hat=True)))


def hat_ratio_factor(params: SleParams, d: Divisor, tip=None, chart: DomainChart = HALFPLANE):
    """E-hat[O] / E[O]: the boundary-condition-changing factor."""
    a = params.a
    ch = _hat_chart(chart, tip)
    w, ld, lr = _chart_data(d, ch)
    total = -0.5 * a * (d.root_minus * lr[0] + d.root_plus * lr[1])
    for wj, s, ss in zip(w, d.sigma, d.sigma_star):
        wj = complex(wj)
        l1m = log_one_minus(wj) + log_one_plus(wj)
        total += s * a * (log_w(wj) - 0.5 * l1m)
        if ss:
            total += ss * a * (log_w(wj.conjugate()) - 0.5 * np.conj(l1m))
    return complex(np.exp(total))


def hat_rooted_corr_via_ratio(params, d, tip=None, chart: DomainChart = HALFPLANE):
    ch = _hat_chart(chart, tip)
    return rooted_vertex_corr(params, d, ch) * hat_ratio_factor(params, d, None, ch)


def psi_corr(params: SleParams, xi, chart: DomainChart = HALFPLANE):
    """E[Psi(xi)] = (w'-)^{a^2/8}(w'+)^{a^2/8} (w'(xi)/(1 - w(xi)^2))^h."""
    xi = float(xi)
    if chart.kind == "halfplane" and abs(xi) >= 1:
        raise ValueError("xi must lie in (-1, 1)")
    w = complex(chart.normalize(xi)).real
    ld = complex(chart.log_dnormalize(xi)).real
    dm, dp = chart.root_derivatives()
    a = params.a
    return float(np.exp(a * a / 8 * (np.log(dm) + np.log(dp))
                        + params.h * (ld - np.log1p(-w) - np.log1p(w))))


# ---------------------------------------------------------------------------
# one-point hat fields

def hat_phi_expectation(params: SleParams, z, chart: DomainChart = HALFPLANE):
    """E-hat[Phi](z) = a arg(w^2/(1 - w^2)) - 2b arg(w'/(1 - w^2)).

    arg branches: arg w in [0, pi], arg(1 -+ w) principal, with boundary
    points read as limits from inside.
    """
    z = np.asarray(z, dtype=complex)
    w = chart.normalize(z)
    w = np.where(w.imag == 0, w.real + 0j, w)
    arg_w = np.where((w.imag == 0) & (w.real < 0), np.pi, np.angle(w))
    # 1 - w sits in the closed lower half plane: a negative real is at -pi
    one_m = 1 - w
    arg_1m = np.where((one_m.imag == 0) & (one_m.real < 0), -np.pi, np.angle(one_m))
    one_p = 1 + w
    arg_1p = np.where((one_p.imag == 0) & (one_p.real < 0), np.pi, np.angle(one_p))
    out = params.a * (2 * arg_w - arg_1m - arg_1p) - 2 * params.b * chart.arg_invariant_form(z)
    return out[()] if out.ndim == 0 else out


def hat_T_expectation(params: SleParams, z, chart: DomainChart = HALFPLANE):
    """E-hat[T](z) = c/12 S_w + h w'^2/(w^2(1 - w^2)) + 4 h_{0,1/2} (w'/(1 - w^2))^2."""
    z = np.asarray(z, dtype=complex)
    w = chart.normalize(z)
    if np.any((w == 0) | (w == 1) | (w == -1)):
        raise ValueError("E-hat[T] has poles at the tip and at q+-")
    dw = chart.dnormalize(z)
    inv = dw / ((1 - w) * (1 + w))
    out = (params.c / 12 * chart.schwarzian_normalize(z)
           + params.h * dw * dw / (w * w * (1 - w) * (1 + w))
           + 4 * params.h_0_half * inv * inv)
    return out[()] if out.ndim == 0 else out


__all__ = [
    "SleParams", "params_from_kappa", "Divisor", "psi_divisor", "Neutrality",
    "check_neutrality", "VertexDims", "vertex_dims", "multi_vertex_corr",
    "rooted_vertex_corr", "hat_rooted_corr", "hat_rooted_corr_via_ratio",
    "hat_ratio_factor", "psi_corr", "hat_phi_expectation", "hat_T_expectation",
    "log_vertex_corr_w", "NeutralityError", "BranchCutError", "STRIP", "HALFPLANE",
]
