# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled zipper kernels.  Same signatures and semantics as _kernels_py."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, sqrt, log, cos, acos, asinh, sinh, fabs, INFINITY, M_PI

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double complex casinh(double complex)
    double complex ccosh(double complex)
    double complex csinh(double complex)
    double complex clog(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)

cnp.import_array()

DEF ALIVE = 0
DEF SWALLOWED = 1
DEF RIGHT = 2
DEF LEFT = 3
DEF HORIZON = 4
DEF RUNNING = 0
DEF HIT = 1
DEF ESCAPED = 2
DEF NEAR = 3


cdef inline double complex _slit(double complex u, double c1, double ehalf,
                                 double complex *deriv) nogil:
    cdef double complex sq = csinh(0.25 * u)
    cdef double complex vm1 = c1 * ccosh(0.5 * u) + 2.0 * sq * sq
    cdef double complex r = 4.0 * casinh(csqrt(0.5 * vm1))
    if cimag(r) < 0 or (cimag(r) == 0 and creal(u) < 0):
        r = -r
    if deriv != NULL:
        deriv[0] = ehalf * csinh(0.5 * u) / csinh(0.5 * r)
    return r


cdef inline double complex _slit_inv(double complex w, double c1) nogil:
    cdef double complex sq = csinh(0.25 * w)
    cdef double complex vm1 = c1 * ccosh(0.5 * w) + 2.0 * sq * sq
    cdef double complex r = 4.0 * casinh(csqrt(0.5 * vm1))
    if cimag(r) < 0 or (cimag(r) == 0 and creal(w) < 0):
        r = -r
    return r


cdef inline double complex _cplx(double re, double im) nogil:
    cdef double complex z
    (<double *>&z)[0] = re
    (<double *>&z)[1] = im
    return z


cdef inline double _height(double dt) nogil:
    return 2.0 * acos(exp(-0.5 * dt))


def slit_step(u, double dt):
    u = np.asarray(u, dtype=complex)
    cdef double complex[::1] uu = np.ascontiguousarray(u).ravel()
    out = np.empty(uu.shape[0], dtype=complex)
    dout = np.empty(uu.shape[0], dtype=complex)
    cdef double complex[::1] o = out
    cdef double complex[::1] do = dout
    cdef double c1 = expm1(0.5 * dt), eh = exp(0.5 * dt)
    cdef Py_ssize_t i
    cdef double complex d
    with nogil:
        for i in range(uu.shape[0]):
            o[i] = _slit(uu[i], c1, eh, &d)
            do[i] = d
    return out.reshape(u.shape), dout.reshape(u.shape)


def slit_inverse(w, double dt):
    w = np.asarray(w, dtype=complex)
    cdef double complex[::1] ww = np.ascontiguousarray(w).ravel()
    out = np.empty(ww.shape[0], dtype=complex)
    cdef double complex[::1] o = out
    cdef double c1 = expm1(-0.5 * dt)
    cdef Py_ssize_t i
    with nogil:
        for i in range(ww.shape[0]):
            o[i] = _slit_inv(ww[i], c1)
    return out.reshape(w.shape)


def slit_height(double dt):
    return _height(dt)


def zipper_forward(centers, dts, z0):
    cdef double[::1] c = np.ascontiguousarray(centers, dtype=float)
    cdef double[::1] h = np.ascontiguousarray(dts, dtype=float)
    w_arr = np.array(z0, dtype=complex).ravel()
    l_arr = np.zeros_like(w_arr)
    cdef double complex[::1] w = w_arr
    cdef double complex[::1] lg = l_arr
    cdef Py_ssize_t k, i, n = c.shape[0], m = w.shape[0]
    cdef double c1, eh
    cdef double complex d
    with nogil:
        for k in range(n):
            c1 = expm1(0.5 * h[k])
            eh = exp(0.5 * h[k])
            for i in range(m):
                w[i] = c[k] + _slit(w[i] - c[k], c1, eh, &d)
                lg[i] = lg[i] + clog(d)
    shape = np.shape(z0)
    return w_arr.reshape(shape), l_arr.reshape(shape)


def zipper_tips(centers, dts):
    cdef double[::1] c = np.ascontiguousarray(centers, dtype=float)
    cdef double[::1] h = np.ascontiguousarray(dts, dtype=float)
    cdef Py_ssize_t n = c.shape[0], j, k
    tips_arr = np.empty(n, dtype=complex)
    c1_arr = np.expm1(-0.5 * np.asarray(h))
    cdef double complex[::1] tips = tips_arr
    cdef double[::1] c1 = c1_arr
    cdef double complex z
    with nogil:
        for k in range(n):
            z = _cplx(c[k], _height(h[k]))
            j = k - 1
            while j >= 0:
                z = c[j] + _slit_inv(z - c[j], c1[j])
                j -= 1
            tips[k] = z
    return tips_arr


def topline_preimage(centers, dts, double u):
    cdef double[::1] c = np.ascontiguousarray(centers, dtype=float)
    cdef double[::1] h = np.ascontiguousarray(dts, dtype=float)
    cdef Py_ssize_t k
    with nogil:
        k = c.shape[0] - 1
        while k >= 0:
            u = c[k] + 2.0 * asinh(exp(-0.5 * h[k]) * sinh(0.5 * (u - c[k])))
            k -= 1
    return u


def polyline_zipper(P, double x, int sub=1):
    P = np.asarray(P, dtype=complex)
    if sub > 1:
        a = P[:-1, None]
        b = P[1:, None]
        frac = np.arange(1, sub + 1)[None, :] / sub
        P = np.concatenate([P[:1], (a + (b - a) * frac).ravel()])
    cdef double complex[::1] q = np.ascontiguousarray(P[1:]).copy()
    cdef Py_ssize_t m = q.shape[0], j, k
    cdef double cap = 0.0, logd = 0.0, a0, hgt, t, c1, eh
    cdef double complex d, p
    with nogil:
        for j in range(m):
            p = q[j]
            a0 = creal(p)
            hgt = cimag(p)
            if hgt <= 0:
                continue
            if hgt > M_PI - 1e-12:
                hgt = M_PI - 1e-12
            t = -2.0 * log(cos(0.5 * hgt))
            cap += t
            c1 = expm1(0.5 * t)
            eh = exp(0.5 * t)
            for k in range(j + 1, m):
                q[k] = a0 + _slit(q[k] - a0, c1, eh, NULL)
            p = _slit(_cplx(x - a0, 0.0), c1, eh, &d)
            x = a0 + creal(p)
            logd += log(creal(d))
    return cap, logd


cdef inline double _adaptive_dt(double dmin, double dt, double kappa, double rho,
                                double d_far, double dt_max) nogil:
    cdef double fine = (rho * dmin) * (rho * dmin) / kappa
    cdef double coarse = dt * (dmin / d_far) * (dmin / d_far)
    if fine > dt:
        fine = dt
    if coarse < fine:
        coarse = fine
    if coarse > dt_max:
        coarse = dt_max
    return coarse


def advance_points(double complex[::1] X, double complex[::1] logd, int[::1] status,
                   double[::1] tau, double[::1] s, const double[::1] normals,
                   double kappa, double dt, double T, bint adaptive, double rho,
                   double d_far, double dt_max, double eps, double x_stop):
    cdef double t = s[0], xi = s[1], steps = s[2]
    cdef Py_ssize_t used = 0, n = normals.shape[0], m = X.shape[0], i
    cdef double dmin, dtk, dB, half, c1, eh, a
    cdef double complex d, xa
    cdef int nalive
    with nogil:
        while used < n:
            nalive = 0
            dmin = INFINITY
            for i in range(m):
                if status[i] == ALIVE:
                    nalive += 1
                    a = cabs(X[i])
                    if a < dmin:
                        dmin = a
            if nalive == 0 or t >= T:
                break
            if adaptive:
                dtk = _adaptive_dt(dmin, dt, kappa, rho, d_far, dt_max)
            else:
                dtk = dt
            if t + dtk > T:
                dtk = T - t
            dB = sqrt(kappa * dtk) * normals[used]
            used += 1
            half = 0.5 * dB
            c1 = expm1(0.5 * dtk)
            eh = exp(0.5 * dtk)
            t += dtk
            xi += dB
            steps += 1
            for i in range(m):
                if status[i] != ALIVE:
                    continue
                xa = _slit(X[i] - half, c1, eh, &d) - half
                X[i] = xa
                logd[i] = logd[i] + clog(d)
                if cabs(xa) < eps:
                    status[i] = SWALLOWED
                    tau[i] = t
                elif x_stop > 0 and creal(xa) > x_stop:
                    status[i] = RIGHT
                    tau[i] = t
                elif x_stop > 0 and creal(xa) < -x_stop:
                    status[i] = LEFT
                    tau[i] = t
        if t >= T:
            for i in range(m):
                if status[i] == ALIVE:
                    status[i] = HORIZON
                    tau[i] = t
    s[0] = t
    s[1] = xi
    s[2] = steps
    return used


cdef double _segment_distance(double complex[::1] P, double c) nogil:
    cdef Py_ssize_t j, m = P.shape[0]
    cdef double best = INFINITY, den, lam, dist
    cdef double complex a, ab, q
    for j in range(m - 1):
        a = P[j]
        ab = P[j + 1] - a
        den = creal(ab) * creal(ab) + cimag(ab) * cimag(ab)
        lam = 0.0
        if den > 0:
            lam = ((c - creal(a)) * creal(ab) - cimag(a) * cimag(ab)) / den
            if lam < 0:
                lam = 0.0
            elif lam > 1:
                lam = 1.0
        q = a + lam * ab - c
        dist = cabs(q)
        if dist < best:
            best = dist
    return best


cdef double _lowest_crossing(double complex[::1] P, double c) nogil:
    cdef Py_ssize_t j, m = P.shape[0]
    cdef double best = INFINITY, ra, rb, y
    for j in range(m - 1):
        ra = creal(P[j]) - c
        rb = creal(P[j + 1]) - c
        if ra * rb <= 0 and ra != rb:
            y = cimag(P[j]) + ra / (ra - rb) * (cimag(P[j + 1]) - cimag(P[j]))
            if y < best:
                best = y
    return best


def advance_restriction(double complex[::1] P, double[::1] s, const double[::1] normals,
                        double kappa, double dt, double T, double rho, double d_far,
                        double dt_max, double dt_min, double eps, double x_stop, double d_stop):
    cdef double t = s[0], xi = s[1], steps = s[2]
    cdef int st = <int>s[3]
    cdef Py_ssize_t used = 0, n = normals.shape[0], m = P.shape[0], j
    cdef double dK, dtk, dB, c, c1, eh, far
    with nogil:
        while used < n and st == RUNNING:
            if t >= T:
                st = HORIZON
                break
            dK = _segment_distance(P, xi)
            if dK < d_stop:
                st = NEAR
                break
            dtk = _adaptive_dt(dK, dt, kappa, rho, d_far, dt_max)
            if dtk < dt_min:
                dtk = dt_min
            if t + dtk > T:
                dtk = T - t
            dB = sqrt(kappa * dtk) * normals[used]
            used += 1
            c = xi + 0.5 * dB
            if _lowest_crossing(P, c) <= _height(dtk) or _segment_distance(P, c) < eps:
                st = HIT
                t += dtk
                xi += dB
                steps += 1
                break
            c1 = expm1(0.5 * dtk)
            eh = exp(0.5 * dtk)
            for j in range(m):
                P[j] = c + _slit(P[j] - c, c1, eh, NULL)
            P[0] = _cplx(creal(P[0]), 0.0)
            t += dtk
            xi += dB
            steps += 1
            if x_stop > 0:
                far = INFINITY
                for j in range(m):
                    if fabs(creal(P[j]) - xi) < far:
                        far = fabs(creal(P[j]) - xi)
                if far > x_stop:
                    st = ESCAPED
    s[0] = t
    s[1] = xi
    s[2] = steps
    s[3] = st
    return used
