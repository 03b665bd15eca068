"""Command-line entry point: sle-lab {simulate, params, correlator, verify, cardy-zhan}.

Exit status: 0 when every requested check comes out as intended (negative
controls must fail), 1 otherwise, 2 on usage or configuration errors.
"""
import argparse
import json
import sys

import numpy as np

from . import checks
from .cft import Divisor, hat_rooted_corr, multi_vertex_corr, params_from_kappa, rooted_vertex_corr
from .conformal import HALFPLANE, STRIP, SlitMapSpec
from .harness import (McReport, RunConfig, endpoint_samples, ks_statistic, mc_drift_tests,
                      mc_endpoint_test, mc_restriction_test, mc_swallow_side_test, side_outcomes)
from .loewner import (COSH_ZIPPER, HALFPLANE_TRANSFORMED, ODE_RK4, STRIP_BROWNIAN,
                      sample_driving, trace)
from .observables import (cardy_zhan_map, endpoint_cdf, left_prob, martingale_observable,
                          restriction_prob, right_prob, swallow_prob)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
VERIFY_SUITES = ("bpz-cardy", "mobius", "drift", "endpoint", "restriction", "swallow-side",
                 "capacity")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def parse_points(text):
    """'0.3+1.5j, -1+2j' -> complex array."""
    try:
        pts = [complex(p.strip().replace("i", "j").replace(" ", "")) for p in text.split(",")
               if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse points {text!r}") from exc
    if not pts:
        raise ConfigError("no points given")
    return np.array(pts)


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _merged(args, defaults):
    """File values over defaults, explicit flags over both."""
    cfg = dict(defaults)
    cfg.update(_load_config(getattr(args, "config", None)))
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _run_config(cfg):
    try:
        return RunConfig.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# simulate / params / correlator / cardy-zhan

def cmd_simulate(args, out):
    cfg = _merged(args, {"kappa": None, "dt": 1e-3, "T": 1.0, "seed": 0, "method": COSH_ZIPPER,
                         "parametrization": STRIP_BROWNIAN, "format": "csv"})
    if cfg["kappa"] is None:
        raise ConfigError("simulate needs --kappa")
    if cfg["method"] not in (COSH_ZIPPER, ODE_RK4):
        raise ConfigError(f"unknown method {cfg['method']!r}")
    try:
        d = sample_driving(float(cfg["kappa"]), float(cfg["dt"]), float(cfg["T"]),
                           int(cfg["seed"]), cfg["parametrization"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    tr = trace(d, cfg["method"])
    if d.parametrization == HALFPLANE_TRANSFORMED:
        tr = np.tanh(tr / 2)
    if cfg["format"] == "json":
        out.write(json.dumps({
            "kappa": d.kappa, "dt": d.dt, "T": d.T, "seed": d.seed, "method": cfg["method"],
            "parametrization": d.parametrization,
            "trace": [[float(t), float(g.real), float(g.imag)] for t, g in zip(d.times, tr)],
        }, sort_keys=True) + "\n")
    else:
        out.write("t,re,im\n")
        for t, g in zip(d.times, tr):
            out.write(f"{t:.10g},{g.real:.17g},{g.imag:.17g}\n")
    return EXIT_OK


def cmd_params(args, out):
    try:
        p = params_from_kappa(args.kappa)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out.write(json.dumps(p.as_dict(), sort_keys=True) + "\n")
    return EXIT_OK


def divisor_from_config(cfg):
    """{"points": [[re, im, sigma, sigma_star], ...], "roots": [minus, plus]}."""
    try:
        entries = tuple((complex(e[0], e[1]), float(e[2]), float(e[3])) for e in cfg["points"])
        roots = cfg.get("roots", [0.0, 0.0])
        return Divisor(entries, float(roots[0]), float(roots[1]))
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad divisor specification: {exc}") from exc


def cmd_correlator(args, out):
    cfg = _load_config(args.config)
    if "kappa" not in cfg:
        raise ConfigError("correlator config needs kappa")
    params = params_from_kappa(float(cfg["kappa"]))
    d = divisor_from_config(cfg)
    kind = cfg.get("kind", "rooted" if d.is_rooted else "multi")
    chart_kind = cfg.get("chart", "halfplane")
    if chart_kind not in ("halfplane", "strip"):
        raise ConfigError(f"unknown chart {chart_kind!r}")
    chart = (STRIP if chart_kind == "strip" else HALFPLANE).with_tip(float(cfg.get("tip", 0.0)))
    try:
        if kind == "multi":
            val = multi_vertex_corr(params, d, chart)
        elif kind == "rooted":
            val = rooted_vertex_corr(params, d, chart)
        elif kind == "hat":
            val = hat_rooted_corr(params, d, chart=chart)
        else:
            raise ConfigError(f"unknown correlator kind {kind!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out.write(json.dumps({"kind": kind, "chart": chart_kind, "re": float(np.real(val)),
                          "im": float(np.imag(val))}, sort_keys=True) + "\n")
    return EXIT_OK


CZ_QUANTITIES = {
    "swallow": swallow_prob,
    "right": right_prob,
    "left": left_prob,
    "map-re": lambda k, z: cardy_zhan_map(k, z).real,
    "map-im": lambda k, z: cardy_zhan_map(k, z).imag,
}


def cmd_cardy_zhan(args, out):
    k = args.kappa
    xs = np.linspace(args.x_min, args.x_max, args.nx)
    out.write("x,y,value\n")
    if args.quantity == "endpoint":
        for x in xs:
            out.write(f"{x:.10g},{np.pi:.10g},{endpoint_cdf(k, x):.15g}\n")
        return EXIT_OK
    if args.quantity == "swallow" and not k > 4:
        raise ConfigError("swallowing probabilities need kappa > 4")
    if k <= 4 and args.quantity.startswith("map"):
        raise ConfigError("the interior map needs kappa > 4 (M(0) diverges otherwise)")
    f = CZ_QUANTITIES[args.quantity]
    ys = np.linspace(args.y_min, args.y_max, args.ny)
    if ys.min() <= 0 or ys.max() > np.pi:
        raise ConfigError("y range must lie in (0, pi]")
    for y in ys:
        for x in xs:
            out.write(f"{x:.10g},{y:.10g},{f(k, complex(x, y)):.15g}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def _verify_drift(cfg):
    rc = _run_config({**cfg, "adaptive": cfg.get("adaptive", True)})
    params = params_from_kappa(rc.kappa)
    points = parse_points(cfg["points"]) if isinstance(cfg["points"], str) else \
        np.asarray(cfg["points"], dtype=complex)
    control_point = complex(cfg["control_point"].replace("i", "j")) \
        if isinstance(cfg["control_point"], str) else complex(cfg["control_point"])
    good = martingale_observable("hat_phi", params)
    bad = martingale_observable("hat_phi", params, b_override=params.b + 0.1)
    reports = []
    for z in points:
        label = f"drift/hat_phi/kappa={rc.kappa:.6g}/z={z.real:g}{z.imag:+g}i"
        if z == control_point:
            r, c = mc_drift_tests([good, bad], [z], rc, names=[label, label + "/b+0.1"])
            c.expect_fail = True
            reports += [r, c]
        else:
            reports += mc_drift_tests([good], [z], rc, names=[label])
    if control_point not in points:
        label = f"drift/hat_phi/kappa={rc.kappa:.6g}/z={control_point.real:g}" \
                f"{control_point.imag:+g}i/b+0.1"
        c = mc_drift_tests([bad], [control_point], rc, names=[label])[0]
        c.expect_fail = True
        reports.append(c)
    return reports


def _verify_endpoint(cfg):
    rc = _run_config(cfg)
    main = mc_endpoint_test(rc, float(cfg["ks_tol"]))
    # negative control: the same samples against the law for twice the kappa
    x = endpoint_samples(rc)
    ks = ks_statistic(x, lambda v: endpoint_cdf(2 * rc.kappa, v))
    control = McReport(f"endpoint/kappa={rc.kappa:.6g}/law-of-2kappa", len(x), ks, 0.0, 0.0,
                       float(cfg["ks_tol"]), rc.seed, expect_fail=True)
    return [main, control]


def _verify_restriction(cfg):
    rc = _run_config(cfg)
    if abs(rc.kappa - 8 / 3) > 1e-9:
        raise ConfigError("verify restriction needs kappa = 8/3")
    try:
        spec = SlitMapSpec(float(cfg["x"]), float(cfg["height"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if spec.base == 0:
        raise ConfigError("the slit must not touch the starting point")
    main = mc_restriction_test(spec, rc, float(cfg["tolerance"]))
    p4 = params_from_kappa(4.0)
    control = McReport(main.name + "/kappa4-exponents", main.n, main.estimate, main.stderr,
                       restriction_prob(spec, p4.h, p4.h_0_half), main.tolerance, main.seed,
                       expect_fail=True)
    return [main, control]


def _verify_swallow_side(cfg):
    rc = _run_config(cfg)
    points = parse_points(cfg["points"]) if isinstance(cfg["points"], str) else \
        np.asarray(cfg["points"], dtype=complex)
    tol = float(cfg["tolerance"])
    reports = mc_swallow_side_test(points, rc, tol)
    # negative control: the first point's frequencies against the formulas at kappa + 2
    z = points[0]
    col = side_outcomes(rc.kappa, [z], rc)[:, 0]
    k2 = rc.kappa + 2
    freqs = {"swallow": (col == 1).mean(), "right": (col == 2).mean(), "left": (col == 3).mean()}
    refs = {"right": right_prob(k2, z), "left": left_prob(k2, z)}
    if k2 > 4:
        refs["swallow"] = swallow_prob(k2, z)
    dev = max(abs(freqs[key] - refs[key]) for key in refs)
    reports.append(McReport(f"side/kappa={rc.kappa:.6g}/formulas-at-kappa+2", len(col),
                            float(dev), 0.0, 0.0, tol, rc.seed, expect_fail=True))
    return reports


def cmd_verify(args, out):
    suite = args.suite
    if suite == "mobius":
        reports = checks.mobius_suite(n=args.n or 50, seed=args.seed or 7,
                                      kappa=args.kappa or 8 / 3)
    elif suite == "bpz-cardy":
        kappas = (args.kappa,) if args.kappa else checks.BPZ_KAPPAS
        reports = checks.bpz_suite(kappas)
    elif suite == "capacity":
        reports = (checks.capacity_suite() + checks.zero_driving_suite()
                   + checks.swallow_time_suite())
    else:
        defaults = {
            "drift": {"kappa": 8 / 3, "dt": 1e-3, "T": 1.0, "n_samples": 5000, "seed": 2024,
                      "points": "0.3+1.5j,1.5+0.3j", "control_point": "1.5+0.3j"},
            "endpoint": {"kappa": 4.0, "dt": 2e-3, "T": 25.0, "n_samples": 20000, "seed": 9,
                         "ks_tol": 0.02},
            "restriction": {"kappa": 8 / 3, "dt": 5e-4, "T": 1.0, "n_samples": 10000,
                            "seed": 8, "x": 0.5, "height": 0.5, "tolerance": 0.05},
            "swallow-side": {"kappa": 6.0, "dt": 2e-3, "T": 1.0, "n_samples": 20000, "seed": 9,
                             "points": "0.4+1.2j,0.5+0.5j,-1+1.5j", "tolerance": 0.02},
        }[suite]
        args.n_samples = args.n
        cfg = _merged(args, defaults)
        runner = {"drift": _verify_drift, "endpoint": _verify_endpoint,
                  "restriction": _verify_restriction, "swallow-side": _verify_swallow_side}[suite]
        try:
            reports = runner(cfg)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad configuration: {exc}") from exc
    ok = all(r.ok for r in reports)
    doc = {"suite": suite, "ok": ok, "reports": [r.to_dict(args.timing) for r in reports]}
    out.write(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="sle-lab", description="Dipolar SLE simulation and verification")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="sample a trace (CSV t,re,im or JSON)")
    s.add_argument("--kappa", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("-T", "--T", dest="T", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--method", choices=(COSH_ZIPPER, ODE_RK4))
    s.add_argument("--parametrization", choices=(STRIP_BROWNIAN, HALFPLANE_TRANSFORMED))
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--config")

    s = sub.add_parser("params", help="print the SLE parameters as JSON")
    s.add_argument("--kappa", type=float, required=True)

    s = sub.add_parser("correlator", help="evaluate a divisor correlator from a JSON config")
    s.add_argument("--config", required=True)

    s = sub.add_parser("verify", help="run a verification suite, print JSON reports")
    s.add_argument("suite", choices=VERIFY_SUITES)
    s.add_argument("--n", type=int, help="sample or case count")
    s.add_argument("--seed", type=int)
    s.add_argument("--kappa", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("-T", "--T", dest="T", type=float)
    s.add_argument("--points", help="comma-separated complex points, e.g. 0.4+1.2j")
    s.add_argument("--config")
    s.add_argument("--timing", action="store_true", help="include wall-clock times")

    s = sub.add_parser("cardy-zhan", help="CSV grid x,y,value of a Cardy-Zhan quantity")
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--quantity", choices=tuple(CZ_QUANTITIES) + ("endpoint",),
                   default="swallow")
    s.add_argument("--x-min", type=float, default=-3.0)
    s.add_argument("--x-max", type=float, default=3.0)
    s.add_argument("--nx", type=int, default=13)
    s.add_argument("--y-min", type=float, default=0.25)
    s.add_argument("--y-max", type=float, default=3.0)
    s.add_argument("--ny", type=int, default=12)
    return p


COMMANDS = {"simulate": cmd_simulate, "params": cmd_params, "correlator": cmd_correlator,
            "verify": cmd_verify, "cardy-zhan": cmd_cardy_zhan}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except ConfigError as exc:
        sys.stderr.write(f"sle-lab: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
