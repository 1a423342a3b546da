"""Scenario grids, per-iteration orchestration, and evaluation metrics.

Every (scenario, iteration) cell is an independent unit: it derives its own
random streams from the scenario seed, simulates a dataset, fits the model,
and summarizes every tracked parameter. Completed cells are persisted as one
JSON file each, so studies are resumable and may run with any degree of
parallelism without changing the aggregated results.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .diagnostics import gelman_rubin, summarize
from .model import ModelSpec
from .populations import (BASELINE_MEANS, BASELINE_TPM, MEAN_PRESETS,
                          SLEEP_TPM, TPM_PRESETS, make_group_params)
from .rng import derive_seed, substream
from .sampler import (McmcConfig, SamplerError, default_hyperpriors,
                      generate_start_values, run_mcmc)
from .simulate import ScenarioSpec, simulate_dataset

log = logging.getLogger(__name__)

BIAS_FLAG_PERCENT = 5.0
COVERAGE_BAND = (0.92, 0.98)

SLEEP_GRID_AXES = {
    "n_subjects": (10, 20, 40, 80),
    "n_occasions": (400, 800, 1600),
    "zeta": (0.25, 0.5, 1.0, 2.0),
    "q_var": (0.1, 0.2, 0.4),
}

BASELINE_CELLS = (
    # (label, tpm preset, n_subjects, n_occasions)
    ("1", "sleep", 40, 800),
    ("2", "baseline", 40, 800),
    ("3", "baseline", 80, 800),
    ("4", "baseline", 80, 3200),
    ("5", "baseline", 140, 800),
)


@dataclass(frozen=True)
class ParamEstimate:
    """One iteration's point and interval estimate of one parameter."""

    estimate: float
    sd: float
    lo: float
    hi: float
    truth: float


@dataclass(frozen=True)
class IterationResult:
    """Everything retained from one (scenario, iteration) cell."""

    scenario_id: str
    iteration: int
    seed: int
    status: str                      # "ok" or "failed: <reason>"
    wall_time: float
    converged: bool | None
    estimates: dict[str, ParamEstimate]

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class ParamMetrics:
    """Performance metrics for one parameter over a scenario's iterations.

    ``percent_bias`` is NaN (and flagged undefined) when the truth is zero;
    absolute bias is always available. Every metric carries a Monte Carlo
    standard error estimating its own simulation noise.
    """

    truth: float
    mean_estimate: float
    bias: float
    percent_bias: float
    emp_se: float
    model_se: float
    mse: float
    coverage: float
    bias_corr_coverage: float
    mean_estimate_mcse: float
    bias_mcse: float
    percent_bias_mcse: float
    emp_se_mcse: float
    model_se_mcse: float
    mse_mcse: float
    coverage_mcse: float
    bias_corr_coverage_mcse: float
    flag_bias: bool
    flag_coverage: bool
    percent_bias_undefined: bool


@dataclass(frozen=True)
class MetricsReport:
    scenario_id: str
    n_iterations: int
    params: dict[str, ParamMetrics]


_PARAM_STEMS = ("emiss_mean", "emiss_varmu", "emiss_var", "alpha", "psi_var",
                "gamma")


def param_sort_key(name: str):
    """Canonical reporting order for tracked parameter names."""
    parts = name.split(".")
    stem = parts[0]
    rank = _PARAM_STEMS.index(stem) if stem in _PARAM_STEMS else len(_PARAM_STEMS)
    return (rank, *(int(p) for p in parts[1:]))


def _fmt_axis(x: float) -> str:
    return f"{x:g}"


def grid_scenario(means: str, tpm: str, n_subjects: int, n_occasions: int,
                  zeta: float, q_var: float, n_sim: int, seed: int
                  ) -> ScenarioSpec:
    prefix = means if means == tpm else f"{means}-{tpm}"
    sid = (f"{prefix}_N{n_subjects}_T{n_occasions}"
           f"_z{_fmt_axis(zeta)}_Q{_fmt_axis(q_var)}")
    group = make_group_params(MEAN_PRESETS[means], TPM_PRESETS[tpm], zeta, q_var)
    return ScenarioSpec(id=sid, group=group, n_subjects=n_subjects,
                        n_occasions=n_occasions, zeta=zeta, q_var=q_var,
                        n_sim=n_sim, seed=seed)


def baseline_scenarios(n_sim: int, seed: int) -> list[ScenarioSpec]:
    """The ten enumerated baseline scenarios (1A-5A, 1B-5B), Q fixed at 0.1."""
    out = []
    for suffix, zeta in (("A", 0.25), ("B", 0.5)):
        for label, tpm_preset, n_subj, n_occ in BASELINE_CELLS:
            tpm = SLEEP_TPM if tpm_preset == "sleep" else BASELINE_TPM
            group = make_group_params(BASELINE_MEANS, tpm, zeta, 0.1)
            out.append(ScenarioSpec(
                id=f"baseline_{label}{suffix}", group=group,
                n_subjects=n_subj, n_occasions=n_occ, zeta=zeta, q_var=0.1,
                n_sim=n_sim, seed=seed))
    return out


def build_scenario_grid(n_sim: int, seed: int, axes: dict | None = None,
                        include_baselines: bool = False,
                        means: str = "sleep", tpm: str | None = None
                        ) -> list[ScenarioSpec]:
    """Full factorial grid over (N, N_T, zeta, Q), optionally plus baselines.

    ``axes`` maps any of n_subjects / n_occasions / zeta / q_var to a list of
    values; omitted axes use the full sleep-study defaults. ``means``/``tpm``
    pick the population preset for the factorial part (the enumerated
    baseline scenarios always use their own populations).
    """
    merged = dict(SLEEP_GRID_AXES)
    for key, vals in (axes or {}).items():
        if key not in merged:
            raise ValueError(f"unknown grid axis {key!r}")
        if not vals:
            raise ValueError(f"grid axis {key!r} is empty")
        merged[key] = tuple(vals)
    tpm = tpm or means
    grid = [grid_scenario(means, tpm, n, t, z, q, n_sim, seed)
            for n in merged["n_subjects"]
            for t in merged["n_occasions"]
            for z in merged["zeta"]
            for q in merged["q_var"]]
    if include_baselines:
        grid += baseline_scenarios(n_sim, seed)
    return grid


def truth_values(scenario: ScenarioSpec) -> dict[str, float]:
    """True values of every tracked parameter, in reporting order."""
    g = scenario.group
    truths: dict[str, float] = {}
    for stem, mat in (("emiss_mean", g.emiss_mean),
                      ("emiss_varmu", g.emiss_rand_var),
                      ("emiss_var", g.emiss_resid_var)):
        for k in range(g.n_dep):
            for s in range(g.m):
                truths[f"{stem}.{k + 1}.{s + 1}"] = float(mat[k, s])
    for i in range(g.m):
        for j in range(g.m - 1):
            truths[f"alpha.{i + 1}.{j + 2}"] = float(g.tpm_intercepts[i, j])
    for i in range(g.m):
        for j in range(g.m - 1):
            truths[f"psi_var.{i + 1}.{j + 2}"] = float(g.tpm_rand_var[i, j])
    tpm = g.group_tpm()
    for i in range(g.m):
        for j in range(g.m):
            truths[f"gamma.{i + 1}.{j + 1}"] = float(tpm[i, j])
    return truths


def run_iteration(scenario: ScenarioSpec, iteration_index: int,
                  mcmc: McmcConfig, check_convergence: bool = False,
                  gr_threshold: float = 1.1) -> IterationResult:
    """Simulate, fit, and summarize one cell.

    The fit seed and start values derive from (scenario seed, scenario id,
    iteration), so cells are reproducible in isolation. A sampler failure is
    reported in ``status`` rather than raised, letting long studies continue.
    """
    fit_seed = derive_seed(scenario.seed, "fit", scenario.id, iteration_index)
    truths = truth_values(scenario)
    t0 = time.perf_counter()
    try:
        data, _ = simulate_dataset(scenario, iteration_index)
        spec = ModelSpec(m=scenario.group.m, n_dep=scenario.group.n_dep)
        hyper = default_hyperpriors(data, spec)
        start = generate_start_values(
            scenario.group,
            substream(scenario.seed, "start", scenario.id, iteration_index))
        cfg = McmcConfig(n_iter=mcmc.n_iter, burn_in=mcmc.burn_in,
                         thin=mcmc.thin, seed=fit_seed, start=start,
                         n_chains=2 if check_convergence else 1)
        chains = run_mcmc(data, spec, hyper, cfg, ref_group=scenario.group)
    except (SamplerError, np.linalg.LinAlgError, ValueError) as e:
        return IterationResult(scenario_id=scenario.id,
                               iteration=iteration_index, seed=fit_seed,
                               status=f"failed: {e}",
                               wall_time=time.perf_counter() - t0,
                               converged=None, estimates={})
    estimates = {}
    for name, truth in truths.items():
        s = summarize(chains[0], name)
        estimates[name] = ParamEstimate(estimate=s.median, sd=s.sd,
                                        lo=s.cci_low, hi=s.cci_high,
                                        truth=truth)
    converged = None
    if check_convergence:
        watch = [n for n in truths if n.startswith(("emiss_mean.", "gamma."))]
        rhat = max(gelman_rubin(chains, n) for n in watch)
        converged = bool(rhat <= gr_threshold)
    return IterationResult(scenario_id=scenario.id, iteration=iteration_index,
                           seed=fit_seed, status="ok",
                           wall_time=time.perf_counter() - t0,
                           converged=converged, estimates=estimates)


def evaluate_metrics(records: list[IterationResult], truths: dict[str, float],
                     scenario_id: str = "") -> MetricsReport:
    """Aggregate one scenario's successful iterations into a MetricsReport.

    bias, empirical SE, average model SE, MSE, coverage and bias-corrected
    coverage follow the usual simulation-study definitions, each with its
    Monte Carlo SE; MCSE(bias) = sqrt(Var(estimates) / S).
    """
    ok = [r for r in records if r.ok]
    s_count = len(ok)
    if s_count < 2:
        raise ValueError("need at least 2 successful iterations")
    params: dict[str, ParamMetrics] = {}
    for name, truth in truths.items():
        est = np.array([r.estimates[name].estimate for r in ok])
        sds = np.array([r.estimates[name].sd for r in ok])
        los = np.array([r.estimates[name].lo for r in ok])
        his = np.array([r.estimates[name].hi for r in ok])

        mean_est = est.mean()
        bias = mean_est - truth
        emp_var = est.var(ddof=1)
        emp_se = math.sqrt(emp_var)
        model_se = math.sqrt(np.mean(sds ** 2))
        sq_err = (est - truth) ** 2
        mse = sq_err.mean()
        cover = np.mean((los <= truth) & (truth <= his))
        cover_bc = np.mean((los <= mean_est) & (mean_est <= his))

        bias_mcse = math.sqrt(emp_var / s_count)
        emp_se_mcse = emp_se / math.sqrt(2.0 * (s_count - 1))
        if model_se > 0:
            model_se_mcse = math.sqrt(np.var(sds ** 2, ddof=1)
                                      / (4.0 * s_count * model_se ** 2))
        else:
            model_se_mcse = 0.0
        mse_mcse = math.sqrt(np.sum((sq_err - mse) ** 2)
                             / (s_count * (s_count - 1)))
        cover_mcse = math.sqrt(cover * (1.0 - cover) / s_count)
        cover_bc_mcse = math.sqrt(cover_bc * (1.0 - cover_bc) / s_count)

        undefined = truth == 0.0
        if undefined:
            pbias = float("nan")
            pbias_mcse = float("nan")
        else:
            pbias = 100.0 * bias / truth
            pbias_mcse = 100.0 * bias_mcse / abs(truth)

        params[name] = ParamMetrics(
            truth=truth, mean_estimate=float(mean_est), bias=float(bias),
            percent_bias=float(pbias), emp_se=float(emp_se),
            model_se=float(model_se), mse=float(mse), coverage=float(cover),
            bias_corr_coverage=float(cover_bc),
            mean_estimate_mcse=float(bias_mcse), bias_mcse=float(bias_mcse),
            percent_bias_mcse=float(pbias_mcse),
            emp_se_mcse=float(emp_se_mcse), model_se_mcse=float(model_se_mcse),
            mse_mcse=float(mse_mcse), coverage_mcse=float(cover_mcse),
            bias_corr_coverage_mcse=float(cover_bc_mcse),
            flag_bias=bool(not undefined and abs(pbias) > BIAS_FLAG_PERCENT),
            flag_coverage=bool(not COVERAGE_BAND[0] <= cover <= COVERAGE_BAND[1]),
            percent_bias_undefined=bool(undefined),
        )
    return MetricsReport(scenario_id=scenario_id, n_iterations=s_count,
                         params=params)


# ---------------------------------------------------------------------------
# Persistence and orchestration


def _record_path(out_dir: Path, scenario_id: str, iteration: int) -> Path:
    return out_dir / "iterations" / scenario_id / f"r{iteration:04d}.json"


def save_iteration(out_dir: Path, result: IterationResult) -> Path:
    path = _record_path(out_dir, result.scenario_id, result.iteration)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = asdict(result)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, sort_keys=True, indent=1))
    tmp.replace(path)
    return path


def load_iteration(path: Path) -> IterationResult:
    payload = json.loads(path.read_text())
    payload["estimates"] = {k: ParamEstimate(**v)
                            for k, v in payload["estimates"].items()}
    return IterationResult(**payload)


def _run_cell(args) -> IterationResult:
    scenario, iteration, mcmc, check, gr_threshold = args
    return run_iteration(scenario, iteration, mcmc,
                         check_convergence=check, gr_threshold=gr_threshold)


RESULT_COLUMNS = [
    "scenario_id", "parameter", "truth", "mean_estimate", "bias",
    "percent_bias", "emp_se", "model_se", "mse", "coverage",
    "bias_corr_coverage", "bias_mcse", "percent_bias_mcse", "emp_se_mcse",
    "model_se_mcse", "mse_mcse", "coverage_mcse", "bias_corr_coverage_mcse",
    "flag_bias", "flag_coverage", "percent_bias_undefined", "n_iterations",
]


def _fmt_cell(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_results_csv(path: Path, reports: list[MetricsReport]) -> None:
    lines = [",".join(RESULT_COLUMNS)]
    for rep in reports:
        for name, p in rep.params.items():
            row = [rep.scenario_id, name, p.truth, p.mean_estimate, p.bias,
                   p.percent_bias, p.emp_se, p.model_se, p.mse, p.coverage,
                   p.bias_corr_coverage, p.bias_mcse, p.percent_bias_mcse,
                   p.emp_se_mcse, p.model_se_mcse, p.mse_mcse,
                   p.coverage_mcse, p.bias_corr_coverage_mcse, p.flag_bias,
                   p.flag_coverage, p.percent_bias_undefined,
                   rep.n_iterations]
            lines.append(",".join(_fmt_cell(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def write_ledger_csv(path: Path, records: list[IterationResult]) -> None:
    lines = ["scenario_id,iteration,seed,status,wall_time"]
    for r in records:
        status = r.status.replace(",", ";")
        lines.append(f"{r.scenario_id},{r.iteration},{r.seed},"
                     f"\"{status}\",{r.wall_time!r}")
    path.write_text("\n".join(lines) + "\n")


def run_study(scenarios: list[ScenarioSpec], mcmc: McmcConfig, out_dir,
              parallelism: int = 1, resume: bool = True,
              convergence_check_fraction: float = 0.0,
              gr_threshold: float = 1.1
              ) -> tuple[list[MetricsReport], list[IterationResult]]:
    """Execute every (scenario, iteration) cell and aggregate the metrics.

    Cells found on disk are reused when ``resume`` is set. Results are
    independent of execution order and of ``parallelism``; wall times in the
    ledger are the only non-deterministic output. Scenarios with fewer than
    two successful iterations are ledgered but omitted from the results.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    check_every = (0 if convergence_check_fraction <= 0
                   else max(1, round(1.0 / convergence_check_fraction)))

    done: dict[tuple[str, int], IterationResult] = {}
    todo = []
    for sc in scenarios:
        for r in range(sc.n_sim):
            path = _record_path(out_dir, sc.id, r)
            if resume and path.exists():
                done[(sc.id, r)] = load_iteration(path)
                continue
            check = bool(check_every and r % check_every == 0)
            todo.append((sc, r, mcmc, check, gr_threshold))

    if parallelism <= 1 or not todo:
        fresh = map(_run_cell, todo)
        for res in fresh:
            save_iteration(out_dir, res)
            done[(res.scenario_id, res.iteration)] = res
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_run_cell, args) for args in todo]
            for fut in as_completed(futures):
                res = fut.result()
                save_iteration(out_dir, res)
                done[(res.scenario_id, res.iteration)] = res

    ledger = []
    reports = []
    for sc in scenarios:
        records = [done[(sc.id, r)] for r in range(sc.n_sim)
                   if (sc.id, r) in done]
        ledger.extend(records)
        n_ok = sum(r.ok for r in records)
        if n_ok < 2:
            log.warning("scenario %s has %d successful iterations; "
                        "skipping metrics", sc.id, n_ok)
            continue
        reports.append(evaluate_metrics(records, truth_values(sc), sc.id))

    write_results_csv(out_dir / "results.csv", reports)
    write_ledger_csv(out_dir / "ledger.csv", ledger)
    return reports, ledger
