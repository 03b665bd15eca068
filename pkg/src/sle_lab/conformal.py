"""Explicit conformal maps of the strip S = {0 < Im z < pi} and the upper half-plane.

Everything here is closed form: the strip/half-plane uniformizer, the Mobius
automorphisms of (H, -1, 1), vertical-slit maps of the strip and their
inverses, strip capacity, and Schwarzian derivatives.
"""
from dataclasses import dataclass

import numpy as np

PI = np.pi
FD_STEP = 1e-6


class DomainError(ValueError):
    """Point outside the domain of a map (on a slit, at a pole, ...)."""


class CriticalPointError(ValueError):
    pass


# ---------------------------------------------------------------------------
# charts

@dataclass(frozen=True)
class DomainChart:
    """A chart of the marked domain, with the growth point at `tip`.

    kind "strip": S with marked points -inf, +inf.
    kind "halfplane": H with marked points -1, +1; the tip must lie in (-1, 1).

    `normalize` sends the chart to (H, 0, -1, 1) with the tip at 0.  For the
    strip the marked points q- = -inf, q+ = +inf carry the local boundary
    coordinates 2e^{z} and -2e^{-z}; in those coordinates the derivative of
    the normalizing map at q-/q+ is e^{-tip} and e^{tip}.
    """
    kind: str = "halfplane"
    tip: float = 0.0

    def __post_init__(self):
        if self.kind not in ("strip", "halfplane"):
            raise ValueError(f"unknown chart kind {self.kind!r}")
        if not np.isfinite(self.tip):
            raise ValueError("tip must be finite")
        if self.kind == "halfplane" and not -1.0 < self.tip < 1.0:
            raise ValueError("half-plane tip must lie in (-1, 1)")

    @property
    def marked(self):
        if self.kind == "strip":
            return (-np.inf, np.inf)
        return (-1.0, 1.0)

    def with_tip(self, tip):
        return DomainChart(self.kind, tip)

    def normalize(self, z):
        """w(z) in (H, 0, -1, 1)."""
        z = np.asarray(z, dtype=complex)
        x = self.tip
        if self.kind == "strip":
            return np.tanh((z - x) / 2)
        return (z - x) / (1 - x * z)

    def log_dnormalize(self, z):
        """A branch of log w'(z), continuous in z and in the tip."""
        z = np.asarray(z, dtype=complex)
        x = self.tip
        if self.kind == "strip":
            return -np.log(2.0) - 2 * np.log(np.cosh((z - x) / 2))
        return np.log1p(-x * x) - 2 * np.log(1 - x * z)

    def dnormalize(self, z):
        return np.exp(self.log_dnormalize(z))

    def d2normalize(self, z):
        z = np.asarray(z, dtype=complex)
        x = self.tip
        if self.kind == "strip":
            u = (z - x) / 2
            return -0.5 * np.tanh(u) / np.cosh(u) ** 2
        return 2 * x * (1 - x * x) / (1 - x * z) ** 3

    def schwarzian_normalize(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "strip":
            return np.full(z.shape, -0.5 + 0j)
        return np.zeros(z.shape, dtype=complex)

    def root_derivatives(self):
        """(w'(q-), w'(q+)) of the normalizing map."""
        x = self.tip
        if self.kind == "strip":
            return np.exp(-x), np.exp(x)
        return (1 - x) / (1 + x), (1 + x) / (1 - x)

    def invariant_form(self, z):
        """w'/(1 - w^2) in closed form (it does not depend on the tip)."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "strip":
            return np.full(z.shape, 0.5 + 0j)
        return 1 / ((1 - z) * (1 + z))

    def arg_invariant_form(self, z):
        """Continuous arg of w'/(1 - w^2)."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "strip":
            return np.zeros(z.shape)
        return -(np.angle(1 - z) + np.angle(1 + z))


STRIP = DomainChart("strip", 0.0)
HALFPLANE = DomainChart("halfplane", 0.0)


# ---------------------------------------------------------------------------
# strip <-> half-plane, Mobius automorphisms

def strip_to_halfplane(z):
    """tanh(z/2): (S, 0, -inf, +inf) -> (H, 0, -1, 1).  Accepts +-inf."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(invalid="ignore", over="ignore"):
        w = np.tanh(z / 2)
    big = np.isinf(z.real)
    if np.any(big):
        w = np.where(big, np.sign(z.real) + 0j, w)
    return w[()] if w.ndim == 0 else w


def halfplane_to_strip(w):
    """Inverse of strip_to_halfplane: 2 artanh(w)."""
    w = np.asarray(w, dtype=complex)
    z = 2 * np.arctanh(w)
    # artanh on the cut (|w| > 1 real) must land on the top line
    on_cut = (w.imag == 0) & (np.abs(w.real) > 1)
    if np.any(on_cut):
        z = np.where(on_cut, z.real + 1j * PI, z)
    return z[()] if z.ndim == 0 else z


def mobius_aut(a_param, z):
    """(a z + 1)/(z + a): an automorphism of (H, -1, 1) for |a| > 1."""
    if not abs(a_param) > 1:
        raise ValueError("mobius_aut needs |a_param| > 1")
    z = np.asarray(z, dtype=complex)
    den = z + a_param
    if np.any(den == 0):
        raise DomainError(f"pole of the Mobius map at z = {-a_param}")
    w = (a_param * z + 1) / den
    return w[()] if w.ndim == 0 else w


def mobius_aut_log_derivative(a_param, z):
    """log h'(z) = log(a^2 - 1) - 2 Log(sign(a) (z + a)).

    The sign picks the branch that tends to 0 as |a| -> inf, i.e. the one
    connected to the identity; -2 Log(z + a) is off by 2 pi i when a < -1.
    """
    z = np.asarray(z, dtype=complex)
    return np.log(a_param * a_param - 1.0) - 2 * np.log(np.sign(a_param) * (z + a_param))


# ---------------------------------------------------------------------------
# Schwarzian

def _fd_derivatives(f, z, step):
    fp = f(z + step)
    fm = f(z - step)
    f0 = f(z)
    fpp = f(z + 2 * step)
    fmm = f(z - 2 * step)
    d1 = (fp - fm) / (2 * step)
    d2 = (fp - 2 * f0 + fm) / step ** 2
    d3 = (fpp - 2 * fp + 2 * fm - fmm) / (2 * step ** 3)
    return d1, d2, d3


def schwarzian_from_derivatives(d1, d2, d3):
    """S = f'''/f' - 3/2 (f''/f')^2."""
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


_CLOSED_SCHWARZIAN = {
    np.exp: lambda z: -0.5 + 0 * z,
    np.tanh: lambda z: -2.0 + 0 * z,
    strip_to_halfplane: lambda z: -0.5 + 0 * z,
}


def schwarzian(f, z, step=1e-3):
    """Schwarzian derivative of f at z.

    Closed form for exp, tanh and tanh(z/2); otherwise central differences.
    f may also be a tuple (f', f'', f''') of callables.
    """
    z = np.asarray(z, dtype=complex)
    if isinstance(f, tuple):
        d1, d2, d3 = (g(z) for g in f)
    elif f in _CLOSED_SCHWARZIAN:
        return _CLOSED_SCHWARZIAN[f](z)
    else:
        d1, d2, d3 = _fd_derivatives(f, z, step)
    if np.any(np.abs(d1) < 1e-12):
        raise CriticalPointError("f'(z) vanishes; Schwarzian undefined")
    return schwarzian_from_derivatives(d1, d2, d3)


# ---------------------------------------------------------------------------
# vertical slits

def slit_height(t):
    """Height of the vertical slit of strip capacity t: e^{t/2} cos(h/2) = 1."""
    return 2 * np.arccos(np.exp(-0.5 * np.asarray(t, dtype=float)))


def scap_vertical_slit(height):
    """Strip capacity -2 log cos(h/2) of a vertical slit of the given height."""
    height = np.asarray(height, dtype=float)
    if np.any(height >= PI) or np.any(height < 0):
        raise ValueError("slit height must lie in [0, pi)")
    out = -2 * np.log(np.cos(height / 2))
    return out[()] if out.ndim == 0 else out


def _solve_cosh(c_minus_1, z, sign_ref):
    # root of cosh(r/2) = c cosh(z/2) written as 4 asinh(sqrt((v-1)/2)) to
    # avoid cancellation; v - 1 = (c-1) cosh(z/2) + 2 sinh(z/4)^2
    vm1 = c_minus_1 * np.cosh(z / 2) + 2 * np.sinh(z / 4) ** 2
    r = 4 * np.arcsinh(np.sqrt(vm1 / 2))
    flip = (r.imag < 0) | ((r.imag == 0) & (sign_ref < 0))
    return np.where(flip, -r, r)


def strip_slit_map(t, z):
    """phi_t: S minus the slit [0, i h(t)] -> S, cosh(phi/2) = e^{t/2} cosh(z/2).

    Branch: phi_t(z) - z -> +-t as Re z -> +-inf, real axis to real axis.
    """
    z = np.asarray(z, dtype=complex)
    t = float(t)
    if t < 0:
        raise ValueError("capacity must be non-negative")
    if t == 0:
        return z[()] if z.ndim == 0 else z.copy()
    h = slit_height(t)
    on_slit = (z.real == 0) & (z.imag >= 0) & (z.imag <= h)
    if np.any(on_slit):
        raise DomainError("point lies on the removed slit")
    out = _solve_cosh(np.expm1(t / 2), z, z.real)
    return out[()] if out.ndim == 0 else out


def strip_slit_map_derivative(t, z, phi=None):
    """phi_t'(z) = e^{t/2} sinh(z/2) / sinh(phi_t(z)/2)."""
    z = np.asarray(z, dtype=complex)
    if phi is None:
        phi = strip_slit_map(t, z)
    return np.exp(t / 2) * np.sinh(z / 2) / np.sinh(phi / 2)


def strip_slit_inverse(t, w):
    """phi_t^{-1}: S -> S minus the slit; real w with |w| < x0 lands on the slit."""
    w = np.asarray(w, dtype=complex)
    t = float(t)
    if t == 0:
        return w[()] if w.ndim == 0 else w.copy()
    out = _solve_cosh(np.expm1(-t / 2), w, w.real)
    return out[()] if out.ndim == 0 else out


def strip_slit_map_topline(t, u):
    """phi_t on the top line, in real coordinates: u + i pi -> phi + i pi."""
    return 2 * np.arcsinh(np.exp(t / 2) * np.sinh(np.asarray(u, dtype=float) / 2))


def strip_slit_inverse_topline(t, u):
    return 2 * np.arcsinh(np.exp(-t / 2) * np.sinh(np.asarray(u, dtype=float) / 2))


@dataclass(frozen=True)
class SlitMapSpec:
    """Vertical slit [x, x + i h] in the strip."""
    base: float
    height: float

    def __post_init__(self):
        if not 0 < self.height < PI:
            raise ValueError("slit height must lie in (0, pi)")

    @property
    def capacity(self):
        return float(scap_vertical_slit(self.height))

    def contains(self, z, tol=0.0):
        z = np.asarray(z, dtype=complex)
        return (np.abs(z.real - self.base) <= tol) & (z.imag >= 0) & (z.imag <= self.height + tol)


def psi_slit(spec, z):
    """(S minus slit, 0, +-inf) -> (S, 0, +-inf):  phi_t(z - x) - phi_t(-x)."""
    t = spec.capacity
    z = np.asarray(z, dtype=complex)
    return strip_slit_map(t, z - spec.base) - strip_slit_map(t, -spec.base + 0j)


def psi_slit_derivative(spec, z):
    z = np.asarray(z, dtype=complex)
    return strip_slit_map_derivative(spec.capacity, z - spec.base)


# ---------------------------------------------------------------------------
# capacity of a normalized map

def scap_numeric(f, R=20.0, tol=1e-6, return_shift=False):
    """Strip capacity s of a hull-removing map f, from f(z) - z -> c +- s at +-inf.

    A map normalized by f(0) = 0 differs from the capacity-normalized one by
    a translation c, so s is half the gap between the two one-sided limits.
    Each limit is read at R and at 2R; disagreement beyond tol means f does
    not behave like z + const at infinity.
    """
    est = []
    for r in (R, 2 * R):
        right = complex(f(complex(r, 0.0))) - r
        left = complex(f(complex(-r, 0.0))) + r
        est.append((right, left))
    (r1, l1), (r2, l2) = est
    if abs(r1 - r2) > tol or abs(l1 - l2) > tol or abs(r2.imag) > tol or abs(l2.imag) > tol:
        raise ValueError(f"map is not capacity-normalized: limits {r2:.6g}, {l2:.6g}")
    s = 0.5 * (r2.real - l2.real)
    if return_shift:
        return s, 0.5 * (r2.real + l2.real)
    return s


def compose(*maps):
    """compose(f, g)(z) = f(g(z))."""
    def composed(z):
        for m in reversed(maps):
            z = m(z)
        return z
    return composed
