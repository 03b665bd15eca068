import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sle_lab.cft import params_from_kappa
from sle_lab.conformal import SlitMapSpec
from sle_lab.harness import (InsufficientDataError, McReport, RunConfig, drift_samples,
                             endpoint_samples, ensemble, ks_statistic, mc_drift_test,
                             mc_restriction_test, mc_swallow_side_test, mean_stderr,
                             side_outcomes, thread_count)
from sle_lab.observables import martingale_observable


def test_pass_rule():
    assert McReport("x", 10, 0.51, 0.001, 0.5, 0.02, 0).passed
    assert not McReport("x", 10, 0.55, 0.001, 0.5, 0.02, 0).passed
    # a large stderr widens the acceptance band to 3 stderr
    assert McReport("x", 10, 0.55, 0.02, 0.5, 0.0, 0).passed
    neg = McReport("x", 10, 0.55, 0.001, 0.5, 0.02, 0, expect_fail=True)
    assert not neg.passed and neg.ok


@given(st.floats(-1, 1), st.floats(0, 0.1))
def test_ci95_contains_estimate(est, se):
    lo, hi = McReport("x", 2, est, se, 0.0, 0.0, 0).ci95
    assert lo <= est <= hi


def test_report_json_fields():
    r = McReport("x", 10, 0.51, 0.001, 0.5, 0.02, 3, wallclock_s=1.5)
    d = json.loads(r.to_json())
    for key in ("formula_value", "mc_estimate", "stderr", "n", "seed", "pass"):
        assert key in d
    assert "wallclock_s" not in d
    assert json.loads(r.to_json(timing=True))["wallclock_s"] == 1.5


@pytest.mark.parametrize("bad", [dict(kappa=0), dict(dt=0), dict(T=-1), dict(dt=2.0, T=1.0),
                                 dict(n_samples=0), dict(seed=-1), dict(method="euler")])
def test_run_config_validation(bad):
    with pytest.raises(ValueError):
        RunConfig(**bad)


def test_run_config_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kappa": 6, "dt": 0.002, "seed": 4, "tolerance": 0.03}))
    cfg = RunConfig.from_file(path)
    assert cfg.kappa == 6.0 and cfg.seed == 4 and cfg.params == {"tolerance": 0.03}
    assert cfg.replace(seed=9, dt=None).seed == 9 and cfg.replace(seed=9).dt == 0.002


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("SLE_LAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("SLE_LAB_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_count()


def test_ensemble_deterministic_and_thread_invariant():
    run = lambda rng: float(rng.standard_normal())
    a = ensemble(run, 50, 7, threads=1)
    b = ensemble(run, 50, 7, threads=4)
    assert a == b == ensemble(run, 50, 7, threads=1)
    assert a != ensemble(run, 50, 8, threads=1)


def test_drift_thread_invariant():
    obs = martingale_observable("hat_phi", params_from_kappa(4))
    cfg = RunConfig(kappa=4, dt=1e-2, T=0.2, n_samples=40, seed=1)
    a, _ = drift_samples(obs, [0.3 + 1.5j], cfg, threads=1)
    b, _ = drift_samples(obs, [0.3 + 1.5j], cfg, threads=3)
    assert np.array_equal(a, b)


def test_mean_stderr():
    m, s = mean_stderr([1.0, 2.0, 3.0, 4.0])
    assert m == 2.5 and abs(s - np.std([1, 2, 3, 4], ddof=1) / 2) < 1e-15
    with pytest.raises(InsufficientDataError):
        mean_stderr([1.0])


def test_constant_observable_has_exactly_zero_drift():
    obs = martingale_observable("constant", params_from_kappa(2))
    r = mc_drift_test(obs, [0.5 + 1j], RunConfig(kappa=2, dt=1e-2, T=0.2, n_samples=20, seed=0))
    assert r.estimate == 0 and r.stderr == 0 and r.passed


def test_ks_statistic_exact_cases():
    uniform = lambda v: min(max(v, 0.0), 1.0)
    assert abs(ks_statistic([0.5], uniform) - 0.5) < 1e-15
    x = (np.arange(100) + 0.5) / 100
    assert abs(ks_statistic(x, uniform) - 0.005) < 1e-12


def test_endpoint_samples_reproducible():
    cfg = RunConfig(kappa=4, dt=1e-2, T=25, n_samples=5, seed=2)
    assert np.array_equal(endpoint_samples(cfg), endpoint_samples(cfg))


def test_restriction_requires_kappa_8_3():
    with pytest.raises(ValueError):
        mc_restriction_test(SlitMapSpec(0.5, 0.5), RunConfig(kappa=4, n_samples=2))


def test_restriction_small_run():
    r = mc_restriction_test(SlitMapSpec(0.5, 0.5),
                            RunConfig(kappa=8 / 3, dt=5e-3, n_samples=200, seed=1), 0.1)
    assert 0 <= r.estimate <= 1 and r.extra["undecided"] == 0
    assert abs(r.reference - 0.8051350737452191) < 1e-13


def test_side_outcomes_decided():
    cfg = RunConfig(kappa=6, dt=5e-3, n_samples=50, seed=3)
    out = side_outcomes(6, [0.4 + 1.2j, 3 + 0.2j], cfg)
    assert out.shape == (50, 2)
    assert set(np.unique(out)) <= {1, 2, 3}
    reports = mc_swallow_side_test([0.4 + 1.2j], cfg, 0.2)
    assert [r.name.split("/")[0] for r in reports] == ["swallow", "right", "left"]
    assert abs(sum(r.estimate for r in reports) - 1) < 1e-12
    # below kappa = 4 nothing is swallowed
    assert len(mc_swallow_side_test([0.4 + 1.2j], cfg.replace(kappa=3), 0.2)) == 2
