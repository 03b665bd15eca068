"""Monte Carlo engine and statistics for the verification suites.

Every run draws from its own generator run_rng(seed, index), and results
are reduced in index order, so reports do not depend on the thread count.
"""
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._backend import kernels
from .conformal import SlitMapSpec
from .loewner import run_endpoint, run_points, run_rng
from .observables import (RESTRICTION_LAMBDA, RESTRICTION_MU, MartingaleObservable,
                          endpoint_cdf, hull_martingale, left_prob, restriction_prob,
                          right_prob, slit_polyline, swallow_prob)

HIT, ESCAPED, NEAR, HORIZON_R = 1, 2, 3, 4
SWALLOWED, RIGHT, LEFT = 1, 2, 3
KAPPA_RESTRICTION = 8 / 3


class InsufficientDataError(RuntimeError):
    """Too few usable runs to form an estimate."""


@dataclass
class McReport:
    name: str
    n: int
    estimate: float
    stderr: float
    reference: float
    tolerance: float
    seed: int
    wallclock_s: float = 0.0
    extra: dict = field(default_factory=dict)
    expect_fail: bool = False   # negative controls must fail

    @property
    def ci95(self):
        return (self.estimate - 1.96 * self.stderr, self.estimate + 1.96 * self.stderr)

    @property
    def passed(self):
        return bool(abs(self.estimate - self.reference) <= max(self.tolerance, 3 * self.stderr))

    @property
    def ok(self):
        """The outcome the suite wants: a pass, or a failure for a negative control."""
        return self.passed != self.expect_fail

    def to_dict(self, timing=False):
        d = {
            "name": self.name, "n": self.n, "estimate": self.estimate, "stderr": self.stderr,
            "ci95": list(self.ci95), "reference": self.reference, "tolerance": self.tolerance,
            "pass": self.passed, "seed": self.seed, "expect_fail": self.expect_fail,
            # the export fields of the observables interface
            "formula_value": self.reference, "mc_estimate": self.estimate,
        }
        if self.extra:
            d["extra"] = self.extra
        if timing:
            d["wallclock_s"] = self.wallclock_s
        return d

    def to_json(self, timing=False):
        return json.dumps(self.to_dict(timing), sort_keys=True)


@dataclass
class RunConfig:
    """Common Monte Carlo settings plus command-specific parameters."""
    kappa: float = 8 / 3
    dt: float = 1e-3
    T: float = 1.0
    n_samples: int = 1000
    seed: int = 0
    method: str = "zipper"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kappa = float(self.kappa)
        self.dt = float(self.dt)
        self.T = float(self.T)
        self.n_samples = int(self.n_samples)
        self.seed = int(self.seed)
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not (self.dt > 0 and self.T > 0):
            raise ValueError("dt and T must be positive")
        if self.dt > self.T:
            raise ValueError("dt must not exceed T")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.method not in ("zipper", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in ("kappa", "dt", "T", "n_samples", "seed", "method") if k in d}
        rest = {k: v for k, v in d.items() if k not in known}
        return cls(**known, params=rest)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **changes):
        d = asdict(self)
        d.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig(**d)


def thread_count():
    raw = os.environ.get("SLE_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"SLE_LAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"SLE_LAB_THREADS must be a positive integer, got {raw!r}")
    return n


def ensemble(run, n, seed, threads=None):
    """[run(run_rng(seed, i)) for i in range(n)], possibly on several threads."""
    threads = thread_count() if threads is None else threads
    job = lambda i: run(run_rng(seed, i))
    if threads == 1:
        return [job(i) for i in range(n)]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(job, range(n), chunksize=max(1, n // (8 * threads))))


def mean_stderr(x):
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        raise InsufficientDataError("need at least two samples")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


# ---------------------------------------------------------------------------
# martingale drift

def _initial(obs, z):
    if obs.kind == "vertex":
        return obs.value(z, np.zeros(len(z), dtype=complex))
    return obs.value(z[0], 0j)


def drift_samples(observables, points, config: RunConfig, threads=None):
    """M_T(z) - M_0(z) per run and observable, all observables on the same runs.

    Points swallowed before T are stopped at tau_z (|w - xi| < eps).  With
    config.params["adaptive"], steps shrink near the tracked points.
    """
    single = isinstance(observables, MartingaleObservable)
    obs_list = [observables] if single else list(observables)
    z = np.atleast_1d(np.asarray(points, dtype=complex))
    m0 = [_initial(o, z) for o in obs_list]
    eps = float(config.params.get("eps", 1e-5))
    adaptive = bool(config.params.get("adaptive", False))

    def run(rng):
        r = run_points(config.kappa, z, rng, config.dt, config.T, adaptive=adaptive, eps=eps)
        out = []
        for o, start in zip(obs_list, m0):
            if o.kind == "vertex":
                out.append(o.value(r.X, r.log_dw, r.t, r.xi) - start)
            else:
                out.append(o.value(r.X[0], r.log_dw[0]) - start)
        return out
    d = np.array(ensemble(run, config.n_samples, config.seed, threads)).T
    return (d[0], m0[0]) if single else (d, m0)


def _drift_report(d, m0, label, config, part, wall):
    d = np.imag(d) if part == "imag" else np.real(d)
    finite = np.isfinite(d)
    if finite.sum() < 2:
        raise InsufficientDataError("fewer than two runs produced finite values")
    est, se = mean_stderr(d[finite])
    return McReport(label, int(finite.sum()), est, se, 0.0,
                    float(config.params.get("tolerance", 0.0)), config.seed, wall,
                    {"initial": float(np.imag(m0) if part == "imag" else np.real(m0)),
                     "nonfinite": int((~finite).sum())})


def mc_drift_test(obs: MartingaleObservable, points, config: RunConfig, part="real",
                  threads=None, name=None) -> McReport:
    """Mean of M_T - M_0; reference 0, passing when within 3 stderr."""
    return mc_drift_tests([obs], points, config, part, threads, [name] if name else None)[0]


def mc_drift_tests(observables, points, config: RunConfig, part="real", threads=None,
                   names=None):
    """One report per observable, sharing the simulated runs (common random numbers)."""
    t0 = time.perf_counter()
    d, m0 = drift_samples(list(observables), points, config, threads)
    wall = time.perf_counter() - t0
    names = names or [f"drift/{o.kind}/kappa={config.kappa:.6g}" for o in observables]
    return [_drift_report(di, mi, nm, config, part, wall) for di, mi, nm in zip(d, m0, names)]


# ---------------------------------------------------------------------------
# endpoint law

def endpoint_samples(config: RunConfig, T_max=25.0, threads=None):
    return np.array(ensemble(lambda rng: run_endpoint(config.kappa, rng, config.dt, T_max),
                             config.n_samples, config.seed, threads))


def ks_statistic(samples, cdf):
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    F = np.array([cdf(v) for v in x])
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def mc_endpoint_test(config: RunConfig, ks_tol=0.02, T_max=25.0, threads=None) -> McReport:
    """Sup distance between the empirical law of Re gamma(inf) and endpoint_cdf."""
    t0 = time.perf_counter()
    x = endpoint_samples(config, T_max, threads)
    ks = ks_statistic(x, lambda v: endpoint_cdf(config.kappa, v))
    return McReport(f"endpoint/kappa={config.kappa:.6g}", len(x), ks, 0.0, 0.0, float(ks_tol),
                    config.seed, time.perf_counter() - t0,
                    {"median": float(np.median(x)), "unstopped": 0})


# ---------------------------------------------------------------------------
# restriction

RESTRICTION_DEFAULTS = dict(rho=0.3, d_far=0.3, dt_max=0.05, dt_min_ratio=1.0, eps=1e-6, x_stop=6.0,
                            m=64)


def _restriction_run(spec, kappa, dt, T, rng, d_stop=0.0, chunk=2048, **opts):
    o = {**RESTRICTION_DEFAULTS, **opts}
    P = np.ascontiguousarray(slit_polyline(spec, int(o["m"])), dtype=complex)
    s = np.zeros(4)
    while True:
        normals = rng.standard_normal(chunk)
        used = kernels.advance_restriction(P, s, normals, float(kappa), float(dt), float(T),
                                           float(o["rho"]), float(o["d_far"]), float(o["dt_max"]),
                                           float(o["dt_min_ratio"]) * dt, float(o["eps"]),
                                           float(o["x_stop"]), float(d_stop))
        if used < chunk:
            break
    return int(s[3]), P, float(s[1]), float(s[0])


def mc_restriction_test(spec: SlitMapSpec, config: RunConfig, tolerance=0.02,
                        threads=None, T_max=1e4) -> McReport:
    """Fraction of runs whose curve avoids the slit vs the restriction formula."""
    if abs(config.kappa - KAPPA_RESTRICTION) > 1e-9:
        raise ValueError("the restriction test needs kappa = 8/3")
    t0 = time.perf_counter()
    opts = {k: config.params[k] for k in RESTRICTION_DEFAULTS if k in config.params}
    status = np.array(ensemble(
        lambda rng: _restriction_run(spec, config.kappa, config.dt, T_max, rng, **opts)[0],
        config.n_samples, config.seed, threads))
    avoid = (status != HIT).astype(float)
    p = float(avoid.mean())
    se = math.sqrt(max(p * (1 - p), 0.0) / len(avoid))
    return McReport(f"restriction/x={spec.base:g},h={spec.height:g}", len(avoid), p, se,
                    restriction_prob(spec), float(tolerance), config.seed,
                    time.perf_counter() - t0,
                    {"undecided": int((status == 0).sum() + (status == HORIZON_R).sum())})


def restriction_drift_samples(spec: SlitMapSpec, config: RunConfig, lam=RESTRICTION_LAMBDA,
                              mu=RESTRICTION_MU, d_stop=0.02, threads=None):
    """M_T - M_0 for M_t = h_t'(xi_t)^lam exp(-2 mu scap K_t), M = 0 after a hit.

    Runs are stopped when the driving point comes within d_stop of the
    image of K (a bounded stopping time keeps the martingale property).
    """
    opts = {k: config.params[k] for k in RESTRICTION_DEFAULTS if k in config.params}
    m = int(opts.get("m", RESTRICTION_DEFAULTS["m"]))
    m0 = hull_martingale(slit_polyline(spec, m), 0.0, lam, mu)

    def run(rng):
        st, P, xi, _ = _restriction_run(spec, config.kappa, config.dt, config.T, rng,
                                        d_stop=d_stop, **opts)
        if st == HIT:
            return -m0
        return hull_martingale(P, xi, lam, mu) - m0
    return np.array(ensemble(run, config.n_samples, config.seed, threads)), m0


def mc_restriction_drift_test(spec: SlitMapSpec, config: RunConfig, lam=RESTRICTION_LAMBDA,
                              mu=RESTRICTION_MU, d_stop=0.02, threads=None) -> McReport:
    t0 = time.perf_counter()
    d, m0 = restriction_drift_samples(spec, config, lam, mu, d_stop, threads)
    est, se = mean_stderr(d)
    return McReport(f"restriction-drift/kappa={config.kappa:.6g}", len(d), est, se, 0.0,
                    float(config.params.get("tolerance", 0.0)), config.seed,
                    time.perf_counter() - t0, {"initial": m0, "lambda": lam, "mu": mu})


# ---------------------------------------------------------------------------
# swallowing and sides

SIDE_DEFAULTS = dict(rho=0.3, d_far=2.0, dt_max=0.05, eps=1e-5, x_stop=16.0, T_max=1e4)


def side_outcomes(kappa, points, config: RunConfig, threads=None):
    """Per run and point: SWALLOWED, RIGHT, LEFT, or 4 (undecided at T_max)."""
    o = {**SIDE_DEFAULTS, **{k: config.params[k] for k in SIDE_DEFAULTS if k in config.params}}
    z = np.atleast_1d(np.asarray(points, dtype=complex))

    def run(rng):
        r = run_points(kappa, z, rng, config.dt, float(o["T_max"]), adaptive=True,
                       rho=float(o["rho"]), d_far=float(o["d_far"]), dt_max=float(o["dt_max"]),
                       eps=float(o["eps"]), x_stop=float(o["x_stop"]))
        return r.status.copy()
    return np.array(ensemble(run, config.n_samples, config.seed, threads))


def mc_swallow_side_test(points, config: RunConfig, tolerance=0.02, threads=None):
    """Three reports per point: swallow, right and left frequencies vs the formulas."""
    t0 = time.perf_counter()
    kappa = config.kappa
    outcomes = side_outcomes(kappa, points, config, threads)
    wall = time.perf_counter() - t0
    reports = []
    for j, z in enumerate(np.atleast_1d(np.asarray(points, dtype=complex))):
        col = outcomes[:, j]
        n = len(col)
        undecided = int(((col != SWALLOWED) & (col != RIGHT) & (col != LEFT)).sum())
        if undecided > 0.02 * n:
            note = "undecided fraction above 2%"
        else:
            note = ""
        refs = {"right": right_prob(kappa, z), "left": left_prob(kappa, z)}
        codes = {"right": RIGHT, "left": LEFT}
        if kappa > 4:
            refs["swallow"] = swallow_prob(kappa, z)
            codes["swallow"] = SWALLOWED
        for key in ("swallow", "right", "left"):
            if key not in refs:
                continue
            p = float((col == codes[key]).mean())
            se = math.sqrt(p * (1 - p) / n)
            extra = {"point": [float(z.real), float(z.imag)], "undecided": undecided}
            if note:
                extra["warning"] = note
            reports.append(McReport(f"{key}/kappa={kappa:.6g}/z={z.real:g}{z.imag:+g}i", n, p,
                                    se, float(refs[key]), float(tolerance), config.seed, wall,
                                    extra))
    return reports


__all__ = [
    "McReport", "RunConfig", "InsufficientDataError", "thread_count", "ensemble",
    "mean_stderr", "drift_samples", "mc_drift_test", "mc_drift_tests", "endpoint_samples",
    "ks_statistic",
    "mc_endpoint_test", "mc_restriction_test", "restriction_drift_samples",
    "mc_restriction_drift_test", "side_outcomes", "mc_swallow_side_test",
]
