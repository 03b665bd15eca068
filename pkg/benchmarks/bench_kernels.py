"""Time the compiled kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from sle_lab import _kernels_py

try:
    from sle_lab import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def path(n, kappa=4.0, dt=1e-3, seed=0):
    rng = np.random.default_rng(seed)
    xi = np.concatenate([[0.0], np.cumsum(rng.standard_normal(n) * np.sqrt(kappa * dt))])
    return 0.5 * (xi[:-1] + xi[1:]), np.full(n, dt)


def case_zipper_tips(mod):
    c, h = path(1000)
    return lambda: mod.zipper_tips(c, h)


def case_advance_points(mod):
    normals = np.random.default_rng(1).standard_normal(4096)

    def run():
        X = np.array([0.4 + 1.2j, 0.5 + 0.5j, -1 + 1.5j])
        mod.advance_points(X, np.zeros(3, dtype=complex), np.zeros(3, dtype=np.int32),
                           np.full(3, np.nan), np.zeros(3), normals, 6.0, 2e-3, 1.0, True,
                           0.3, 2.0, 0.05, 1e-5, 16.0)
    return run


def case_advance_restriction(mod):
    normals = np.random.default_rng(2).standard_normal(4096)

    def run():
        P = 0.5 + 1j * np.linspace(0, 0.5, 65)
        mod.advance_restriction(P, np.zeros(4), normals, 8 / 3, 5e-4, 1.0, 0.3, 0.3, 0.05,
                                5e-4, 1e-6, 6.0, 0.0)
    return run


def case_topline(mod):
    c, h = path(12_500)
    return lambda: mod.topline_preimage(c, h, 0.3)


CASES = {
    "zipper_tips (1000 steps)": case_zipper_tips,
    "advance_points (3 points, adaptive)": case_advance_points,
    "advance_restriction (65-point slit)": case_advance_restriction,
    "topline_preimage (12500 steps)": case_topline,
}


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        print("compiled kernels not built; only the numpy fallback is timed")
    print(f"{'kernel':40s} {'numpy (s)':>11s} {'cython (s)':>11s} {'speedup':>9s}")
    for name, make in CASES.items():
        tp = best_time(make(_kernels_py), args.repeat)
        if compiled is None:
            print(f"{name:40s} {tp:11.4f}")
            continue
        tc = best_time(make(compiled), args.repeat)
        print(f"{name:40s} {tp:11.4f} {tc:11.5f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
