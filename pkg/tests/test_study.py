import json
import math

import numpy as np
import pytest

from mlhmm.populations import BASELINE_TPM, SLEEP_TPM
from mlhmm.sampler import McmcConfig, SamplerError
from mlhmm.study import (IterationResult, ParamEstimate, baseline_scenarios,
                         build_scenario_grid, evaluate_metrics,
                         grid_scenario, load_iteration, param_sort_key,
                         run_iteration, run_study, save_iteration,
                         truth_values)

TINY_MCMC = McmcConfig(n_iter=120, burn_in=40, thin=1, seed=0)


def tiny_scenario(n_sim=3, seed=77, n_subjects=3, n_occasions=60):
    return grid_scenario("baseline", "baseline", n_subjects, n_occasions,
                         0.25, 0.1, n_sim, seed)


def synthetic_records(rng, truth, s_count, spread=1.0, sd=0.5,
                      scenario_id="syn"):
    records = []
    for r in range(s_count):
        est = truth + rng.normal(0, spread)
        records.append(IterationResult(
            scenario_id=scenario_id, iteration=r, seed=r, status="ok",
            wall_time=0.0, converged=None,
            estimates={"p": ParamEstimate(estimate=est, sd=sd,
                                          lo=est - 2 * sd, hi=est + 2 * sd,
                                          truth=truth)}))
    return records


# ---------------------------------------------------------------------------
# Grids and truths


def test_grid_counts():
    assert len(build_scenario_grid(n_sim=1, seed=0)) == 144
    assert len(build_scenario_grid(n_sim=1, seed=0, include_baselines=True)) == 154
    assert len(baseline_scenarios(1, 0)) == 10
    single = build_scenario_grid(n_sim=1, seed=0, axes={
        "n_subjects": [10], "n_occasions": [400], "zeta": [0.25],
        "q_var": [0.1]})
    assert len(single) == 1
    assert single[0].id == "sleep_N10_T400_z0.25_Q0.1"
    with pytest.raises(ValueError):
        build_scenario_grid(n_sim=1, seed=0, axes={"bogus": [1]})
    with pytest.raises(ValueError):
        build_scenario_grid(n_sim=1, seed=0, axes={"zeta": []})


def test_baseline_scenario_settings():
    by_id = {s.id: s for s in baseline_scenarios(1, 0)}
    s4 = by_id["baseline_4A"]
    assert (s4.n_subjects, s4.n_occasions, s4.zeta, s4.q_var) == (80, 3200, 0.25, 0.1)
    assert by_id["baseline_1B"].zeta == 0.5
    np.testing.assert_allclose(by_id["baseline_1A"].group.group_tpm(),
                               SLEEP_TPM, atol=1e-12)
    np.testing.assert_allclose(by_id["baseline_2A"].group.group_tpm(),
                               BASELINE_TPM, atol=1e-12)
    ids = [s.id for s in baseline_scenarios(1, 0)]
    assert len(set(ids)) == 10


def test_truth_values_content():
    sc = tiny_scenario()
    truths = truth_values(sc)
    assert len(truths) == 9 + 9 + 9 + 6 + 6 + 9
    assert truths["emiss_mean.1.1"] == -3.9
    assert truths["emiss_varmu.2.3"] == 0.25
    assert truths["emiss_var.1.1"] == pytest.approx(0.1)
    assert truths["gamma.1.1"] == pytest.approx(0.8, abs=1e-12)
    # identical off-baseline probabilities give a zero intercept truth
    assert truths["alpha.3.3"] == pytest.approx(0.0, abs=1e-12)
    names = list(truths)
    assert names == sorted(names, key=param_sort_key)


# ---------------------------------------------------------------------------
# Metrics


def test_metrics_perfect_estimates():
    truth = 1.7
    records = []
    for r in range(5):
        records.append(IterationResult(
            scenario_id="s", iteration=r, seed=r, status="ok", wall_time=0.0,
            converged=None,
            estimates={"p": ParamEstimate(estimate=truth, sd=0.1,
                                          lo=truth - 1, hi=truth + 1,
                                          truth=truth)}))
    rep = evaluate_metrics(records, {"p": truth}, "s")
    m = rep.params["p"]
    assert m.bias == 0.0 and m.mse == 0.0 and m.coverage == 1.0
    assert m.percent_bias == 0.0
    assert not m.flag_bias
    assert m.flag_coverage          # 1.0 lies outside the 0.92..0.98 band


def test_metrics_mse_identity_random_records():
    rng = np.random.default_rng(8)
    for trial in range(20):
        truth = rng.normal()
        records = synthetic_records(rng, truth, s_count=int(rng.integers(5, 40)))
        rep = evaluate_metrics(records, {"p": truth})
        m = rep.params["p"]
        s = len(records)
        ident = m.bias ** 2 + (s - 1) / s * m.emp_se ** 2
        assert abs(m.mse - ident) < 1e-10


def test_metrics_percent_bias_example():
    # truth -1.00 with mean estimate -1.0811 is +8.11 percent bias
    records = []
    ests = [-1.0811, -1.0811]
    for r, e in enumerate(ests):
        records.append(IterationResult(
            scenario_id="s", iteration=r, seed=r, status="ok", wall_time=0.0,
            converged=None,
            estimates={"p": ParamEstimate(estimate=e, sd=0.1, lo=-2, hi=0,
                                          truth=-1.0)}))
    m = evaluate_metrics(records, {"p": -1.0}).params["p"]
    assert m.percent_bias == pytest.approx(8.11, abs=1e-9)
    assert m.flag_bias


def test_metrics_zero_truth_flags_percent_bias():
    rng = np.random.default_rng(9)
    records = synthetic_records(rng, truth=0.0, s_count=10)
    m = evaluate_metrics(records, {"p": 0.0}).params["p"]
    assert m.percent_bias_undefined
    assert math.isnan(m.percent_bias)
    assert math.isfinite(m.bias)
    assert not m.flag_bias


def test_metrics_coverage_mcse_values():
    # the standard binomial MCSE in percent: sqrt(95*5/250) and sqrt(50*50/250)
    assert 100 * math.sqrt(0.95 * 0.05 / 250) == pytest.approx(1.38, abs=0.005)
    assert 100 * math.sqrt(0.50 * 0.50 / 250) == pytest.approx(3.16, abs=0.005)
    rng = np.random.default_rng(10)
    records = synthetic_records(rng, truth=0.0, s_count=250)
    m = evaluate_metrics(records, {"p": 0.0}).params["p"]
    expect = math.sqrt(m.coverage * (1 - m.coverage) / 250)
    assert m.coverage_mcse == pytest.approx(expect, abs=1e-12)


def test_metrics_mcse_shrink_with_more_iterations():
    rng = np.random.default_rng(11)
    records = synthetic_records(rng, truth=2.0, s_count=200)
    doubled = records + [
        IterationResult(scenario_id="syn", iteration=200 + r.iteration,
                        seed=r.seed, status="ok", wall_time=0.0,
                        converged=None, estimates=r.estimates)
        for r in records]
    m1 = evaluate_metrics(records, {"p": 2.0}).params["p"]
    m2 = evaluate_metrics(doubled, {"p": 2.0}).params["p"]
    for field in ("bias_mcse", "emp_se_mcse", "mse_mcse"):
        ratio = getattr(m2, field) / getattr(m1, field)
        assert ratio == pytest.approx(1 / math.sqrt(2), rel=0.10)
    for field in ("bias_mcse", "emp_se_mcse", "model_se_mcse", "mse_mcse",
                  "coverage_mcse", "bias_corr_coverage_mcse"):
        assert getattr(m1, field) >= 0.0


def test_metrics_require_two_successes():
    rng = np.random.default_rng(12)
    records = synthetic_records(rng, truth=1.0, s_count=1)
    with pytest.raises(ValueError):
        evaluate_metrics(records, {"p": 1.0})


def test_metrics_model_se():
    rng = np.random.default_rng(13)
    records = synthetic_records(rng, truth=0.3, s_count=50, sd=0.7)
    m = evaluate_metrics(records, {"p": 0.3}).params["p"]
    assert m.model_se == pytest.approx(0.7, abs=1e-12)


# ---------------------------------------------------------------------------
# Iterations and the study loop


def test_run_iteration_deterministic():
    sc = tiny_scenario()
    a = run_iteration(sc, 0, TINY_MCMC)
    b = run_iteration(sc, 0, TINY_MCMC)
    assert a.status == "ok"
    assert a.seed == b.seed
    for name in a.estimates:
        assert a.estimates[name] == b.estimates[name]
    c = run_iteration(sc, 1, TINY_MCMC)
    assert c.estimates["emiss_mean.1.1"] != a.estimates["emiss_mean.1.1"]


def test_run_iteration_convergence_flag():
    sc = tiny_scenario()
    rec = run_iteration(sc, 0, TINY_MCMC, check_convergence=True,
                        gr_threshold=2.5)
    assert rec.converged is True


def test_run_iteration_records_failure(monkeypatch):
    import mlhmm.study as study_mod

    def boom(*a, **k):
        raise SamplerError(3, "emission")

    monkeypatch.setattr(study_mod, "run_mcmc", boom)
    rec = run_iteration(tiny_scenario(), 0, TINY_MCMC)
    assert rec.status.startswith("failed:")
    assert rec.estimates == {}


def test_iteration_record_round_trip(tmp_path):
    sc = tiny_scenario()
    rec = run_iteration(sc, 0, TINY_MCMC)
    path = save_iteration(tmp_path, rec)
    back = load_iteration(path)
    assert back == rec
    payload = json.loads(path.read_text())
    assert payload["scenario_id"] == sc.id


def test_run_study_ledger_and_resume(tmp_path, monkeypatch):
    import mlhmm.study as study_mod

    calls = []
    real = study_mod.run_iteration

    def counting(scenario, iteration, *a, **k):
        calls.append((scenario.id, iteration))
        return real(scenario, iteration, *a, **k)

    monkeypatch.setattr(study_mod, "run_iteration", counting)
    scenarios = [tiny_scenario(n_sim=3, seed=5),
                 grid_scenario("baseline", "baseline", 3, 50, 0.5, 0.1, 3, 5)]
    reports, ledger = run_study(scenarios, TINY_MCMC, tmp_path, parallelism=1)
    assert len(ledger) == 6
    assert len(reports) == 2
    assert len(calls) == 6
    assert (tmp_path / "results.csv").exists()
    assert (tmp_path / "ledger.csv").exists()

    # resume: nothing recomputed
    calls.clear()
    run_study(scenarios, TINY_MCMC, tmp_path, parallelism=1)
    assert calls == []

    # delete one record: only that cell is recomputed
    victim = next((tmp_path / "iterations").glob("*/r0001.json"))
    victim.unlink()
    calls.clear()
    run_study(scenarios, TINY_MCMC, tmp_path, parallelism=1)
    assert len(calls) == 1 and calls[0][1] == 1


def test_run_study_parallel_matches_serial(tmp_path):
    scenarios = [tiny_scenario(n_sim=2, seed=9, n_subjects=2,
                               n_occasions=40)]
    r1, _ = run_study(scenarios, TINY_MCMC, tmp_path / "serial", parallelism=1)
    r2, _ = run_study(scenarios, TINY_MCMC, tmp_path / "par", parallelism=4)
    a = (tmp_path / "serial" / "results.csv").read_text()
    b = (tmp_path / "par" / "results.csv").read_text()
    assert a == b


def test_run_study_skips_scenarios_without_successes(tmp_path, monkeypatch):
    import mlhmm.study as study_mod

    def boom(scenario, iteration, *a, **k):
        return IterationResult(scenario_id=scenario.id, iteration=iteration,
                               seed=0, status="failed: synthetic",
                               wall_time=0.0, converged=None, estimates={})

    monkeypatch.setattr(study_mod, "run_iteration", boom)
    scenarios = [tiny_scenario(n_sim=2, seed=5)]
    reports, ledger = run_study(scenarios, TINY_MCMC, tmp_path, parallelism=1)
    assert reports == []
    assert len(ledger) == 2
    assert all(not r.ok for r in ledger)
