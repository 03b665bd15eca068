"""Dirichlet Green's function and brute-force Gaussian free field correlations.

This module is the independent oracle for the closed-form correlators: the
n-point function of Phi (with optional d/dz, d/dzbar derivatives) is the
Wick sum over all perfect matchings of 2G-type propagators.  Enumeration is
exponential and capped at n = 10 points.
"""
from math import factorial

import numpy as np

from .conformal import HALFPLANE, DomainChart

MAX_POINTS = 10


class SingularityError(ValueError):
    """Coincident insertion points."""


def _to_w(chart, z):
    z = complex(z)
    w = complex(chart.normalize(z))
    return w


def green(zeta, z, chart: DomainChart = HALFPLANE):
    """G(zeta, z) = log |(zeta - conj z)/(zeta - z)| pulled back through the chart."""
    u = _to_w(chart, zeta)
    w = _to_w(chart, z)
    if u == w:
        raise SingularityError("green: coincident points")
    if u.imag == 0 or w.imag == 0:
        return 0.0
    return float(np.log(abs(u - w.conjugate()) / abs(u - w)))


def _dlog(j, k, diff):
    # d^j_A d^k_B log(A - B) evaluated at A - B = diff, j + k >= 1
    n = j + k
    return (-1) ** (j - 1) * factorial(n - 1) / diff ** n


def _propagator_w(u, w, du, dw):
    """d^{du} of 2G(u, w) in the w-coordinates of the normalized half-plane.

    du = (p, q): p holomorphic and q antiholomorphic derivatives at u; same
    for dw.  2G = log(u - wb) + log(ub - w) - log(u - w) - log(ub - wb).
    """
    (p1, q1), (p2, q2) = du, dw
    if p1 + q1 + p2 + q2 == 0:
        if u.imag == 0 or w.imag == 0:
            return 0.0
        return 2 * np.log(abs(u - w.conjugate()) / abs(u - w))
    total = 0j
    # each term depends on one of (u, ub) and one of (w, wb)
    terms = (
        (+1, "u", "wb", u, w.conjugate()),
        (+1, "ub", "w", u.conjugate(), w),
        (-1, "u", "w", u, w),
        (-1, "ub", "wb", u.conjugate(), w.conjugate()),
    )
    for sign, a_var, b_var, a, b in terms:
        ja = p1 if a_var == "u" else q1
        kb = p2 if b_var == "w" else q2
        # derivatives in the variable the term does not depend on kill it
        if (a_var == "u" and q1) or (a_var == "ub" and p1):
            continue
        if (b_var == "w" and q2) or (b_var == "wb" and p2):
            continue
        if ja + kb == 0:
            continue
        total += sign * _dlog(ja, kb, a - b)
    return total


def _chain(chart, z, order):
    # coefficients B[m] with d^order F(w(z)) = sum_m B[m] F^{(m)}(w)
    if order == 0:
        return {0: 1.0}
    d1 = complex(chart.dnormalize(z))
    if order == 1:
        return {1: d1}
    d2 = complex(chart.d2normalize(z))
    if order == 2:
        return {1: d2, 2: d1 * d1}
    raise ValueError("derivative order above 2 is not supported")


def two_point(z1, d1, z2, d2, chart: DomainChart = HALFPLANE):
    """E[d1 Phi(z1) d2 Phi(z2)] with d = (holomorphic order, antiholomorphic order)."""
    if complex(z1) == complex(z2):
        raise SingularityError("two_point: coincident points")
    u = _to_w(chart, z1)
    w = _to_w(chart, z2)
    c1 = _chain(chart, z1, d1[0])
    c1b = {m: np.conj(v) for m, v in _chain(chart, z1, d1[1]).items()}
    c2 = _chain(chart, z2, d2[0])
    c2b = {m: np.conj(v) for m, v in _chain(chart, z2, d2[1]).items()}
    total = 0j
    for p1, a in c1.items():
        for q1, ab in c1b.items():
            for p2, b in c2.items():
                for q2, bb in c2b.items():
                    total += a * ab * b * bb * _propagator_w(u, w, (p1, q1), (p2, q2))
    if d1 == (0, 0) and d2 == (0, 0):
        return float(total.real)
    return complex(total)


def perfect_matchings(items):
    """Yield every perfect matching of `items` as a list of pairs."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for i in range(1, len(items)):
        pair = (first, items[i])
        rest = items[1:i] + items[i + 1:]
        for m in perfect_matchings(rest):
            yield [pair] + m


def gff_correlation(points, chart: DomainChart = HALFPLANE, return_count=False):
    """E[prod_j d_j Phi(z_j)] by Wick's formula.

    points: sequence of z or (z, (p, q)) with p, q <= 2 derivative orders.
    Odd n gives 0.  With return_count, also returns the number of matchings
    that were summed.
    """
    norm = []
    for item in points:
        if isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], tuple):
            norm.append((complex(item[0]), tuple(item[1])))
        else:
            norm.append((complex(item), (0, 0)))
    n = len(norm)
    if n > MAX_POINTS:
        raise ValueError(f"at most {MAX_POINTS} insertions are supported")
    zs = [z for z, _ in norm]
    if len(set(zs)) != n:
        raise SingularityError("gff_correlation: coincident points")
    if n % 2:
        return (0.0, 0) if return_count else 0.0
    cache = {}

    def prop(i, j):
        if (i, j) not in cache:
            cache[(i, j)] = two_point(norm[i][0], norm[i][1], norm[j][0], norm[j][1], chart)
        return cache[(i, j)]

    total = 0.0
    count = 0
    for matching in perfect_matchings(range(n)):
        term = 1.0
        for i, j in matching:
            term = term * prop(i, j)
        total = total + term
        count += 1
    if all(d == (0, 0) for _, d in norm):
        total = float(np.real(total))
    return (total, count) if return_count else total


def chiral_corr(z, z0, kind="plus_plus", chart: DomainChart = HALFPLANE):
    """Formal chiral 2-point functions, principal log branch.

    plus_plus:  E[Phi+(z) Phi+(z0)] = log 1/(w(z) - w(z0))
    plus_minus: E[Phi+(z) Phi-(z0)] = log (w(z) - conj w(z0))
    """
    w = _to_w(chart, z)
    w0 = _to_w(chart, z0)
    if kind == "plus_plus":
        if w == w0:
            raise SingularityError("chiral_corr: coincident images")
        return complex(np.log(1 / (w - w0)))
    if kind == "plus_minus":
        if w == w0.conjugate():
            raise SingularityError("chiral_corr: w(z) equals conj w(z0)")
        return complex(np.log(w - w0.conjugate()))
    raise ValueError(f"unknown kind {kind!r}")
