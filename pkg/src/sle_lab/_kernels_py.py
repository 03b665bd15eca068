"""Pure numpy implementation of the zipper kernels.

Mirrors _kernels.pyx function by function; selected when the compiled
extension is missing or SLE_LAB_PURE=1.  Loops over steps in Python, so it
is one to two orders of magnitude slower.
"""
import math

import numpy as np

# status codes shared with the compiled kernels
ALIVE, SWALLOWED, RIGHT, LEFT, HORIZON = 0, 1, 2, 3, 4
RUNNING, HIT, ESCAPED, NEAR = 0, 1, 2, 3


def slit_step(u, dt):
    """phi_dt(u) and phi_dt'(u) for the vertical slit of capacity dt at 0."""
    c1 = math.expm1(0.5 * dt)
    vm1 = c1 * np.cosh(0.5 * u) + 2 * np.sinh(0.25 * u) ** 2
    r = 4 * np.arcsinh(np.sqrt(0.5 * vm1))
    flip = (r.imag < 0) | ((r.imag == 0) & (u.real < 0))
    r = np.where(flip, -r, r)
    d = math.exp(0.5 * dt) * np.sinh(0.5 * u) / np.sinh(0.5 * r)
    return r, d


def slit_inverse(w, dt):
    c1 = math.expm1(-0.5 * dt)
    vm1 = c1 * np.cosh(0.5 * w) + 2 * np.sinh(0.25 * w) ** 2
    r = 4 * np.arcsinh(np.sqrt(0.5 * vm1))
    flip = (r.imag < 0) | ((r.imag == 0) & (w.real < 0))
    return np.where(flip, -r, r)


def slit_height(dt):
    return 2 * math.acos(math.exp(-0.5 * dt))


def zipper_forward(centers, dts, z0):
    """Apply z -> c_k + phi_{dt_k}(z - c_k) for every step; returns (w, log w')."""
    w = np.array(z0, dtype=complex)
    logd = np.zeros_like(w)
    for c, dt in zip(centers, dts):
        r, d = slit_step(w - c, dt)
        w = c + r
        logd += np.log(d)
    return w, logd


def zipper_tips(centers, dts):
    """Trace points gamma(t_{k+1}) = F_0^{-1} ... F_{k-1}^{-1}(c_k + i h_k)."""
    n = len(centers)
    tips = np.empty(n, dtype=complex)
    for k in range(n):
        tips[k] = centers[k] + 1j * slit_height(dts[k])
    for j in range(n - 2, -1, -1):
        seg = tips[j + 1:]
        tips[j + 1:] = centers[j] + slit_inverse(seg - centers[j], dts[j])
    return tips


def topline_preimage(centers, dts, u):
    """Pull a top-line point u + i pi back through all steps (real arithmetic)."""
    for k in range(len(centers) - 1, -1, -1):
        c = centers[k]
        u = c + 2 * math.asinh(math.exp(-0.5 * dts[k]) * math.sinh(0.5 * (u - c)))
    return u


def polyline_zipper(P, x, sub=1):
    """Vertical-slit zipper of the polyline P[0] (real base) -> P[1] -> ... .

    Each chord is split into `sub` pieces.  Returns (capacity, log h'(x)) for
    the composed hull-removing map and the real point x.
    """
    P = np.asarray(P, dtype=complex)
    if sub > 1:
        pts = [P[0]]
        for a, b in zip(P[:-1], P[1:]):
            for s in range(1, sub + 1):
                pts.append(a + (b - a) * s / sub)
        P = np.array(pts)
    q = P[1:].copy()
    cap = 0.0
    logd = 0.0
    x = float(x)
    for j in range(len(q)):
        p = q[j]
        a = p.real
        hgt = min(max(p.imag, 0.0), math.pi - 1e-12)
        if hgt <= 0:
            continue
        t = -2 * math.log(math.cos(0.5 * hgt))
        cap += t
        rest = q[j + 1:]
        if len(rest):
            r, _ = slit_step(rest - a, t)
            q[j + 1:] = a + r
        r, d = slit_step(np.array([complex(x - a, 0.0)]), t)
        x = a + r[0].real
        logd += math.log(d[0].real)
    return cap, logd


def _adaptive_dt(dmin, dt, kappa, rho, d_far, dt_max):
    # fine steps near tracked points, coarse steps far away
    fine = min(dt, (rho * dmin) ** 2 / kappa)
    coarse = dt * (dmin / d_far) ** 2
    return min(max(coarse, fine), dt_max)


def advance_points(X, logd, status, tau, s, normals, kappa, dt, T, adaptive,
                   rho, d_far, dt_max, eps, x_stop):
    """Advance relative positions X = w - xi of tracked points.

    s = [t, xi, steps].  Consumes normals; returns the number used.  Stops
    when every point is decided or t reaches T.
    """
    t, xi, steps = s[0], s[1], s[2]
    used = 0
    n = len(normals)
    while used < n:
        alive = status == ALIVE
        if not alive.any() or t >= T:
            break
        dmin = np.abs(X[alive]).min()
        dtk = _adaptive_dt(dmin, dt, kappa, rho, d_far, dt_max) if adaptive else dt
        if t + dtk > T:
            dtk = T - t
        dB = math.sqrt(kappa * dtk) * normals[used]
        used += 1
        half = 0.5 * dB
        r, d = slit_step(X[alive] - half, dtk)
        X[alive] = r - half
        logd[alive] += np.log(d)
        t += dtk
        xi += dB
        steps += 1
        idx = np.flatnonzero(alive)
        xa = X[idx]
        sw = np.abs(xa) < eps
        status[idx[sw]] = SWALLOWED
        tau[idx[sw]] = t
        if x_stop > 0:
            right = ~sw & (xa.real > x_stop)
            left = ~sw & (xa.real < -x_stop)
            status[idx[right]] = RIGHT
            status[idx[left]] = LEFT
            tau[idx[right | left]] = t
    if t >= T:
        alive = status == ALIVE
        status[alive] = HORIZON
        tau[alive] = t
    s[0], s[1], s[2] = t, xi, steps
    return used


def _segment_distance(P, c):
    a = P[:-1]
    b = P[1:]
    ab = b - a
    den = (ab.real ** 2 + ab.imag ** 2)
    lam = np.where(den > 0, ((c - a) * np.conj(ab)).real / np.where(den > 0, den, 1), 0.0)
    lam = np.clip(lam, 0.0, 1.0)
    return np.abs(a + lam * ab - c).min()


def _lowest_crossing(P, c):
    ra = P[:-1].real - c
    rb = P[1:].real - c
    straddle = (ra * rb <= 0) & (ra != rb)
    if not straddle.any():
        return math.inf
    a = P[:-1][straddle]
    b = P[1:][straddle]
    lam = ra[straddle] / (ra[straddle] - rb[straddle])
    return float((a.imag + lam * (b.imag - a.imag)).min())


def advance_restriction(P, s, normals, kappa, dt, T, rho, d_far, dt_max, dt_min, eps,
                        x_stop, d_stop):
    """Advance the image polyline P of a hull attached to the real line.

    s = [t, xi, steps, status].  A step whose slit meets the polyline is a
    hit.  Returns the number of normals used.
    """
    t, xi, steps, st = s[0], s[1], s[2], int(s[3])
    used = 0
    n = len(normals)
    while used < n and st == RUNNING:
        if t >= T:
            st = HORIZON
            break
        dK = _segment_distance(P, xi)
        if dK < d_stop:
            st = NEAR
            break
        dtk = max(_adaptive_dt(dK, dt, kappa, rho, d_far, dt_max), dt_min)
        if t + dtk > T:
            dtk = T - t
        dB = math.sqrt(kappa * dtk) * normals[used]
        used += 1
        c = xi + 0.5 * dB
        if _lowest_crossing(P, c) <= slit_height(dtk) or _segment_distance(P, c) < eps:
            st = HIT
            t += dtk
            xi += dB
            steps += 1
            break
        r, _ = slit_step(P - c, dtk)
        P[:] = c + r
        P[0] = P[0].real
        t += dtk
        xi += dB
        steps += 1
        if x_stop > 0 and np.abs(P.real - xi).min() > x_stop:
            st = ESCAPED
    s[0], s[1], s[2], s[3] = t, xi, steps, st
    return used
