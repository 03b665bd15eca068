"""Dipolar Loewner evolution in the strip and in the half-plane.

Two integrators are provided:

* OdeRK4 integrates  d/dt w_t(z) = coth((w_t(z) - xi_t)/2)  with RK4 on a
  piecewise-linear driving function, substeps shrinking near the tip.
* CoshZipper composes exact slit maps.  Step k uses the slit of capacity
  dt_k at the midpoint (xi_k + xi_{k+1})/2; for constant driving this is the
  exact solution, for Brownian driving it is a symmetric splitting.

Random streams: run `i` of an ensemble with seed `s` draws from
numpy's PCG64 seeded by SeedSequence(s, spawn_key=(i,)).
"""
import json
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .conformal import slit_height, strip_slit_inverse, strip_slit_map

STRIP_BROWNIAN = "strip"
HALFPLANE_TRANSFORMED = "halfplane"
ODE_RK4 = "rk4"
COSH_ZIPPER = "zipper"

ALIVE, SWALLOWED, RIGHT, LEFT, HORIZON = 0, 1, 2, 3, 4
EPS_SWALLOW = 1e-3
MAX_STEPS = 10 ** 8


def run_rng(seed, index=0):
    """Independent generator for run `index` of an ensemble seeded by `seed`."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(seq))


# ---------------------------------------------------------------------------
# driving functions

@dataclass(frozen=True)
class DrivingPath:
    kappa: float
    dt: float
    T: float
    seed: int
    parametrization: str
    times: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    brownian: np.ndarray = field(repr=False)

    @property
    def n_steps(self):
        return len(self.times) - 1

    def strip_driving(self):
        """sqrt(kappa) B: the strip driving function for either parametrization."""
        return np.sqrt(self.kappa) * self.brownian


def sample_driving(kappa, dt, T, seed, parametrization=STRIP_BROWNIAN, index=0) -> DrivingPath:
    """Brownian driving sampled on t_k = k dt; reproducible from (seed, index)."""
    if not (dt > 0 and T > 0):
        raise ValueError("dt and T must be positive")
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    n = int(round(T / dt))
    if n < 1 or n > MAX_STEPS:
        raise ValueError(f"T/dt = {T / dt:g} outside [1, 1e8]")
    if parametrization not in (STRIP_BROWNIAN, HALFPLANE_TRANSFORMED):
        raise ValueError(f"unknown parametrization {parametrization!r}")
    rng = run_rng(seed, index)
    B = np.concatenate([[0.0], np.cumsum(rng.standard_normal(n) * np.sqrt(dt))])
    times = np.arange(n + 1) * dt
    s = np.sqrt(kappa) * B
    xi = s if parametrization == STRIP_BROWNIAN else np.tanh(s / 2)
    return DrivingPath(float(kappa), float(dt), float(n * dt), int(seed), parametrization,
                       times, xi, B)


def constant_driving(dt, T, value=0.0, parametrization=STRIP_BROWNIAN) -> DrivingPath:
    n = int(round(T / dt))
    times = np.arange(n + 1) * dt
    xi = np.full(n + 1, float(value))
    B = np.zeros(n + 1)
    return DrivingPath(0.0, float(dt), float(n * dt), 0, parametrization, times, xi, B)


# ---------------------------------------------------------------------------
# evolution record

@dataclass
class LoewnerEvolution:
    driving: DrivingPath
    z0: np.ndarray
    w: np.ndarray
    log_dw: np.ndarray
    status: np.ndarray
    tau: np.ndarray
    method: str
    chart: str = "strip"
    trace: np.ndarray = None
    boundary_log_dw: tuple = None

    @property
    def dw(self):
        return np.exp(self.log_dw)

    def alive(self):
        return self.status == ALIVE

    def trace_csv(self):
        tr = self.trace if self.trace is not None else trace(self.driving)
        lines = ["t,re,im"]
        for t, g in zip(self.driving.times, tr):
            lines.append(f"{t:.10g},{g.real:.17g},{g.imag:.17g}")
        return "\n".join(lines) + "\n"

    def snapshot(self):
        tr = self.trace if self.trace is not None else trace(self.driving)
        d = self.driving
        return {
            "kappa": d.kappa, "dt": d.dt, "T": d.T, "seed": d.seed, "method": self.method,
            "trace": [[float(t), float(g.real), float(g.imag)] for t, g in zip(d.times, tr)],
            "swallowed": [[float(z.real), float(z.imag), float(t)]
                          for z, s, t in zip(self.z0, self.status, self.tau) if s == SWALLOWED],
        }

    def snapshot_json(self):
        return json.dumps(self.snapshot(), sort_keys=True)


# ---------------------------------------------------------------------------
# RK4 integration

def _strip_rhs(w, xi):
    u = (w - xi) / 2
    return 1 / np.tanh(u), -0.5 / np.sinh(u) ** 2


def _halfplane_rhs(g, xi):
    # dg/dt = -v_xi(g);  d/dt log g' = -v_xi'(g)
    d = xi - g
    r = (1 - xi * xi) ** 2
    v = 0.5 * (r / d - (xi * g * g + (xi * xi - 1) * g + xi ** 3 - 2 * xi))
    v1 = 0.5 * (r / d ** 2 - (2 * xi * g + xi * xi - 1))
    return -v, -v1


def _rk4_evolve(driving: DrivingPath, z0, rhs, eps, substep_scale=0.05, extra=None):
    """Shared RK4 loop over driving steps; extra points are never swallowed (boundary)."""
    xi = driving.xi
    dt = driving.dt
    w = np.array(z0, dtype=complex).ravel().copy()
    ld = np.zeros_like(w)
    status = np.zeros(len(w), dtype=np.int32)
    tau = np.full(len(w), np.nan)
    ex = None if extra is None else np.array(extra, dtype=complex)
    exl = None if extra is None else np.zeros(len(ex), dtype=complex)
    for k in range(driving.n_steps):
        a, b = xi[k], xi[k + 1]
        t0 = driving.times[k]
        s = 0.0
        while s < dt:
            alive = status == ALIVE
            if alive.any():
                dist = np.abs(w[alive] - (a + (b - a) * s / dt)).min()
                hs = min(dt - s, max(substep_scale * dist * dist, 1e-12))
            else:
                hs = dt - s
            if not alive.any() and ex is None:
                break

            def drive(frac):
                return a + (b - a) * frac / dt

            for arr, larr, mask in ((w, ld, alive), (ex, exl, None)):
                if arr is None:
                    continue
                y = arr if mask is None else arr[mask]
                x1, x2, x3 = drive(s), drive(s + hs / 2), drive(s + hs)
                k1, l1 = rhs(y, x1)
                k2, l2 = rhs(y + hs / 2 * k1, x2)
                k3, l3 = rhs(y + hs / 2 * k2, x2)
                k4, l4 = rhs(y + hs * k3, x3)
                ny = y + hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                nl = hs / 6 * (l1 + 2 * l2 + 2 * l3 + l4)
                if mask is None:
                    arr[:] = ny
                    larr[:] += nl
                else:
                    arr[mask] = ny
                    larr[mask] += nl
            s += hs
            if alive.any():
                xs = drive(s)
                idx = np.flatnonzero(alive)
                gone = np.abs(w[idx] - xs) < eps
                status[idx[gone]] = SWALLOWED
                tau[idx[gone]] = t0 + s
        if not (status == ALIVE).any() and ex is None:
            break
    return w, ld, status, tau, ex, exl


def evolve_strip(driving: DrivingPath, points, method=ODE_RK4, eps_swallow=EPS_SWALLOW,
                 with_trace=False) -> LoewnerEvolution:
    """Evolve tracked points of the strip under the dipolar Loewner flow.

    w holds w_t(z) at the final time (or at the swallowing time), log_dw
    the matching log w_t'(z).
    """
    if driving.parametrization != STRIP_BROWNIAN:
        raise ValueError("evolve_strip needs a strip-parametrized driving")
    z0 = np.atleast_1d(np.asarray(points, dtype=complex))
    if np.any((z0.imag <= 0) | (z0.imag > np.pi)):
        raise ValueError("points must lie in the strip 0 < Im z <= pi")
    if method == ODE_RK4:
        w, ld, status, tau, _, _ = _rk4_evolve(driving, z0, _strip_rhs, eps_swallow)
    elif method == COSH_ZIPPER:
        w, ld, status, tau = _zipper_evolve(driving, z0, eps_swallow)
    else:
        raise ValueError(f"unknown method {method!r}")
    tr = trace(driving, method) if with_trace else None
    return LoewnerEvolution(driving, z0, w, ld, status, tau, method, "strip", tr)


def _zipper_evolve(driving, z0, eps):
    xi = driving.xi
    X = (z0 - xi[0]).astype(complex)
    ld = np.zeros(len(z0), dtype=complex)
    status = np.zeros(len(z0), dtype=np.int32)
    tau = np.full(len(z0), np.nan)
    s = np.array([0.0, xi[0], 0.0])
    normals = np.diff(xi) / np.sqrt(max(driving.kappa, 1e-300) * driving.dt) if driving.kappa > 0 \
        else np.zeros(driving.n_steps)
    kernels.advance_points(X, ld, status, tau, s, np.ascontiguousarray(normals),
                           max(driving.kappa, 0.0), driving.dt, 2 * driving.T,
                           False, 0.0, 1.0, driving.dt, eps, 0.0)
    # advance_points leaves X relative to the final driving value
    w = X + s[1]
    return w, ld, status, tau


def evolve_halfplane(driving: DrivingPath, points, eps_swallow=EPS_SWALLOW) -> LoewnerEvolution:
    """Evolve points of H under dg/dt = -v_xi(g); also tracks g_t'(+-1)."""
    if driving.parametrization != HALFPLANE_TRANSFORMED:
        raise ValueError("evolve_halfplane needs a half-plane-transformed driving")
    z0 = np.atleast_1d(np.asarray(points, dtype=complex))
    if np.any(z0.imag <= 0):
        raise ValueError("points must lie in the open upper half-plane")
    w, ld, status, tau, ex, exl = _rk4_evolve(driving, z0, _halfplane_rhs, eps_swallow,
                                              extra=np.array([-1.0, 1.0]))
    ev = LoewnerEvolution(driving, z0, w, ld, status, tau, ODE_RK4, "halfplane")
    ev.boundary_log_dw = (complex(exl[0]), complex(exl[1]))
    ev.boundary_points = (complex(ex[0]), complex(ex[1]))
    return ev


# ---------------------------------------------------------------------------
# zipper primitives

@dataclass
class ZipperState:
    """Forward map stack of the zipper plus tracked points."""
    centers: list = field(default_factory=list)
    dts: list = field(default_factory=list)
    points: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    log_dw: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    t: float = 0.0
    tip: complex = 0j

    def forward(self, z):
        """The composed map w_t(z)."""
        w, _ = kernels.zipper_forward(np.array(self.centers), np.array(self.dts),
                                      np.atleast_1d(np.asarray(z, dtype=complex)))
        return w

    def forward_with_derivative(self, z):
        w, ld = kernels.zipper_forward(np.array(self.centers), np.array(self.dts),
                                       np.atleast_1d(np.asarray(z, dtype=complex)))
        return w, np.exp(ld)


def zipper_step(state: ZipperState, xi_k, xi_next, dt) -> ZipperState:
    """Compose one slit map of capacity dt centered at (xi_k + xi_next)/2."""
    c = 0.5 * (xi_k + xi_next)
    pts = state.points
    if len(pts):
        u = pts - c
        w = strip_slit_map(dt, u) + c
        d = np.exp(dt / 2) * np.sinh(u / 2) / np.sinh((w - c) / 2)
        pts = w
        logd = state.log_dw + np.log(d)
    else:
        logd = state.log_dw
    tip = c + 1j * float(slit_height(dt))
    for cj, dj in zip(reversed(state.centers), reversed(state.dts)):
        tip = cj + complex(strip_slit_inverse(dj, tip - cj))
    return ZipperState(state.centers + [c], state.dts + [dt], pts, logd, state.t + dt, tip)


def step_centers(driving: DrivingPath):
    x = driving.strip_driving()
    return 0.5 * (x[:-1] + x[1:]), np.diff(driving.times)


def trace(driving: DrivingPath, method=COSH_ZIPPER):
    """gamma(t_k), k = 0..n, as a complex array (strip coordinates)."""
    if method == COSH_ZIPPER:
        c, h = step_centers(driving)
        tips = kernels.zipper_tips(np.ascontiguousarray(c), np.ascontiguousarray(h))
        return np.concatenate([[complex(driving.strip_driving()[0])], tips])
    if method == ODE_RK4:
        return _trace_backward_ode(driving)
    raise ValueError(f"unknown method {method!r}")


def _trace_backward_ode(driving: DrivingPath, delta=None, substep_scale=0.05):
    # every tip gamma(t_k) is the time-reversed flow from xi_k + i delta down
    # to t = 0; all of them are integrated together, one seed per step
    xi = driving.strip_driving()
    dt = driving.dt
    n = driving.n_steps
    delta = 0.03 * np.sqrt(dt) if delta is None else delta
    pts = np.empty(n + 1, dtype=complex)
    pts[0] = xi[0]
    active = np.zeros(0, dtype=complex)
    owners = np.zeros(0, dtype=int)
    for k in range(n, 0, -1):
        active = np.append(active, xi[k] + 1j * delta)
        owners = np.append(owners, k)
        a, b = xi[k], xi[k - 1]          # going backward from t_k to t_{k-1}
        s = 0.0
        while s < dt:
            dist = np.abs(active - (a + (b - a) * s / dt)).min()
            hs = min(dt - s, max(substep_scale * dist * dist, 1e-12))

            def f(y, frac):
                return -1 / np.tanh((y - (a + (b - a) * frac / dt)) / 2)

            k1 = f(active, s)
            k2 = f(active + hs / 2 * k1, s + hs / 2)
            k3 = f(active + hs / 2 * k2, s + hs / 2)
            k4 = f(active + hs * k3, s + hs)
            active = active + hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            s += hs
    pts[owners] = active
    return pts


# ---------------------------------------------------------------------------
# ensemble engine on the compiled kernels

@dataclass
class PointRun:
    """Outcome of one run tracking points in uniformized coordinates."""
    X: np.ndarray           # w_t(z) - xi_t
    log_dw: np.ndarray
    status: np.ndarray
    tau: np.ndarray
    t: float
    xi: float
    steps: int


def run_points(kappa, points, rng, dt, T, adaptive=False, rho=0.3, d_far=2.0, dt_max=0.05,
               eps=1e-5, x_stop=0.0, chunk=4096) -> PointRun:
    """Advance tracked points along one Brownian driving path from `rng`.

    With x_stop > 0, points whose uniformized position leaves |Re X| <= x_stop
    are classified RIGHT/LEFT and frozen.  Swallowed points freeze at
    |X| < eps.  Normals are drawn in chunks, so results depend only on the
    stream, not on the chunk size.
    """
    X = np.array(points, dtype=complex).ravel().copy()
    ld = np.zeros(len(X), dtype=complex)
    status = np.zeros(len(X), dtype=np.int32)
    tau = np.full(len(X), np.nan)
    s = np.zeros(3)
    while True:
        normals = rng.standard_normal(chunk)
        used = kernels.advance_points(X, ld, status, tau, s, normals, float(kappa), float(dt),
                                      float(T), bool(adaptive), float(rho), float(d_far),
                                      float(dt_max), float(eps), float(x_stop))
        if used < chunk:
            break
    return PointRun(X, ld, status, tau, s[0], s[1], int(s[2]))


def run_endpoint(kappa, rng, dt, T_max=25.0, chunk=None):
    """Re gamma(infinity): the preimage of xi_T + pi i under all step maps."""
    n = int(round(T_max / dt))
    dB = rng.standard_normal(n) * np.sqrt(kappa * dt)
    xi = np.concatenate([[0.0], np.cumsum(dB)])
    centers = 0.5 * (xi[:-1] + xi[1:])
    return kernels.topline_preimage(centers, np.full(n, dt), float(xi[-1]))
