"""Command-line front end.

Subcommands: ``simulate``, ``fit``, ``study``, ``diagnose``, ``ppc``,
``metrics``. Every command is driven by a YAML config (see README for the
schema); ``--seed``, ``--out``, ``--parallel`` and ``--resume`` override the
corresponding config fields. Exit codes: 0 ok, 1 validation error,
2 runtime/numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, ppc, storage, study
from .inference import EmissionPointParams, decode_states
from .model import Dataset, ModelSpec, SubjectSeries, stationary_distribution
from .populations import make_group_params, preset_group_params
from .rng import substream
from .sampler import (Chain, Hyperpriors, McmcConfig, default_hyperpriors,
                      run_mcmc)
from .simulate import InitialDistribution, ScenarioSpec, simulate_dataset
from .storage import ConfigError, DataFormatError, load_config, require

log = logging.getLogger(__name__)

HYPER_FIELDS = ("k0", "nu", "v", "alpha0", "beta0", "tpm_int_prior_mean",
                "tpm_int_prior_var", "tpm_var_prior_shape",
                "tpm_var_prior_scale")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _population_from_config(cfg: dict):
    pop = require(cfg, "population", dict)
    if "params_file" in pop:
        return storage.read_group_params(pop["params_file"])
    if "emiss_mean" in pop:
        return storage.group_params_from_dict(pop)
    zeta = float(require(cfg, "population.zeta"))
    q_var = float(require(cfg, "population.q_var"))
    resid = float(pop.get("resid_var", 0.1))
    if "tpm" in pop and not isinstance(pop["tpm"], str):
        return make_group_params(np.array(require(cfg, "population.means")),
                                 np.array(pop["tpm"]), zeta, q_var, resid)
    means = pop.get("means", "sleep")
    tpm = pop.get("tpm", means)
    return preset_group_params(means, tpm, zeta, q_var, resid)


def _scenario_from_config(cfg: dict, seed: int) -> ScenarioSpec:
    group = _population_from_config(cfg)
    sc = require(cfg, "scenario", dict)
    delta = None
    if "delta" in sc:
        delta = InitialDistribution(np.array(sc["delta"], dtype=float))
    return ScenarioSpec(
        id=str(sc.get("id", "scenario")),
        group=group,
        n_subjects=int(require(cfg, "scenario.n_subjects")),
        n_occasions=int(require(cfg, "scenario.n_occasions")),
        zeta=float(require(cfg, "population.zeta")),
        q_var=float(require(cfg, "population.q_var")),
        n_sim=int(sc.get("n_sim", 1)),
        seed=seed,
        delta=delta)


def _mcmc_from_config(cfg: dict, seed: int) -> McmcConfig:
    mc = require(cfg, "mcmc", dict)
    return McmcConfig(n_iter=int(require(cfg, "mcmc.n_iter")),
                      burn_in=int(require(cfg, "mcmc.burn_in")),
                      thin=int(mc.get("thin", 1)),
                      seed=seed,
                      n_chains=int(mc.get("n_chains", 1)))


def _hyper_overrides(cfg: dict) -> dict:
    hp = cfg.get("hyperpriors") or {}
    unknown = set(hp) - set(HYPER_FIELDS) - {"mu0"}
    if unknown:
        raise ConfigError(f"unknown hyperprior field(s): {sorted(unknown)}")
    return {k: float(v) for k, v in hp.items() if k != "mu0"}


def _resolve_seed(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" not in cfg:
        raise ConfigError("missing config field 'seed'")
    return int(cfg["seed"])


def _resolve_out(cfg: dict, args) -> Path:
    out = args.out or cfg.get("out")
    if not out:
        raise ConfigError("missing config field 'out'")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _spec_from_config(cfg: dict, n_dep: int) -> ModelSpec:
    model = cfg.get("model") or {}
    m = int(model.get("n_states", 3))
    labels = model.get("state_labels")
    dep_labels = model.get("dep_labels")
    return ModelSpec(m=m, n_dep=int(model.get("n_dep", n_dep)),
                     state_labels=tuple(labels) if labels else None,
                     dep_labels=tuple(dep_labels) if dep_labels else None)


def _fmt_table(rows: list[list[str]], header: list[str]) -> str:
    widths = [max(len(str(r[i])) for r in [header] + rows)
              for i in range(len(header))]
    def fmt(row):
        return "  ".join(str(v).ljust(w) for v, w in zip(row, widths))
    return "\n".join([fmt(header), fmt(["-" * w for w in widths])]
                     + [fmt(r) for r in rows])


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = _resolve_seed(cfg, args)
    out = _resolve_out(cfg, args)
    scenario = _scenario_from_config(cfg, seed)
    sc_dir = out / scenario.id
    sc_dir.mkdir(parents=True, exist_ok=True)
    for r in range(scenario.n_sim):
        data, subj = simulate_dataset(scenario, r)
        storage.write_dataset_csv(sc_dir / f"r{r:04d}.csv", data)
        storage.write_truth_sidecar(sc_dir / f"r{r:04d}.truth.yaml",
                                    scenario, subj, r)
    cfg["seed"] = seed
    cfg["out"] = str(out)
    storage.write_effective_config(out, cfg)
    print(f"wrote {scenario.n_sim} dataset(s) for scenario "
          f"{scenario.id!r} under {sc_dir}")
    return 0


def _label(spec: ModelSpec, kind: str, idx: int) -> str:
    labels = spec.dep_labels if kind == "dep" else spec.state_labels
    return labels[idx - 1] if labels else str(idx)


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    seed = _resolve_seed(cfg, args)
    out = _resolve_out(cfg, args)
    data = storage.read_dataset_csv(args.data)
    spec = _spec_from_config(cfg, data.n_dep)
    if spec.n_dep != data.n_dep:
        raise ConfigError(f"model.n_dep={spec.n_dep} but dataset has "
                          f"{data.n_dep} variables")
    data.validate_states(spec.m)
    hyper = default_hyperpriors(data, spec, **_hyper_overrides(cfg))
    mcmc = _mcmc_from_config(cfg, seed)
    chains = run_mcmc(data, spec, hyper, mcmc)
    for i, chain in enumerate(chains):
        chain.spec = spec
        storage.write_chain_csv(out / f"chain_{i + 1}.csv", chain)

    merged = np.concatenate if len(chains) > 1 else (lambda xs: xs[0])
    names = [n for n in chains[0].parameter_names() if n != "loglik"]
    header = ["parameter", "MAP (SD)", "95% CCI"]
    if len(chains) > 1:
        header.append("R-hat")
    rows = []
    csv_lines = [",".join(["parameter", "median", "mean", "sd", "cci_low",
                           "cci_high"] + (["rhat"] if len(chains) > 1 else []))]
    for name in names:
        draws = merged([c.parameter(name) for c in chains])
        s = diagnostics.summarize(draws)
        row = [name, f"{s.median:.3f} ({s.sd:.3f})",
               f"[{s.cci_low:.3f}, {s.cci_high:.3f}]"]
        csv_row = [name, repr(s.median), repr(s.mean), repr(s.sd),
                   repr(s.cci_low), repr(s.cci_high)]
        if len(chains) > 1:
            rhat = diagnostics.gelman_rubin(chains, name)
            row.append(f"{rhat:.3f}")
            csv_row.append(repr(rhat))
        rows.append(row)
        csv_lines.append(",".join(csv_row))
    (out / "summary.csv").write_text("\n".join(csv_lines) + "\n")
    cfg["seed"] = seed
    cfg["out"] = str(out)
    storage.write_effective_config(out, cfg)
    print(_fmt_table(rows, header))
    print(f"\nwrote {len(chains)} chain file(s) and summary.csv to {out}")
    return 0


def cmd_study(args) -> int:
    cfg = load_config(args.config)
    seed = _resolve_seed(cfg, args)
    out = _resolve_out(cfg, args)
    st = require(cfg, "study", dict)
    n_sim = int(require(cfg, "study.n_sim"))
    axes = st.get("grid") or {}
    scenarios = study.build_scenario_grid(
        n_sim=n_sim, seed=seed, axes=axes,
        include_baselines=bool(st.get("include_baselines", False)),
        means=st.get("means", "sleep"), tpm=st.get("tpm"))
    if st.get("baselines_only"):
        scenarios = study.baseline_scenarios(n_sim, seed)
    mcmc = _mcmc_from_config(cfg, seed)
    parallel = args.parallel if args.parallel is not None else int(st.get("parallel", 1))
    reports, ledger = study.run_study(
        scenarios, mcmc, out,
        parallelism=parallel,
        resume=args.resume if args.resume is not None else bool(st.get("resume", True)),
        convergence_check_fraction=float(st.get("convergence_check_fraction", 0.0)),
        gr_threshold=float(st.get("gr_threshold", 1.1)))
    cfg["seed"] = seed
    cfg["out"] = str(out)
    storage.write_effective_config(out, cfg)
    n_ok = sum(r.ok for r in ledger)
    print(f"{len(scenarios)} scenario(s), {len(ledger)} iteration(s) "
          f"({n_ok} ok); results.csv and ledger.csv in {out}")
    return 0


def cmd_diagnose(args) -> int:
    chains = [storage.read_chain_csv(p) for p in args.chains]
    lengths = {c.n_draws for c in chains}
    if len(lengths) > 1:
        raise ConfigError("chains have different stored lengths")
    names = chains[0].parameter_names()
    header = ["parameter", "median", "sd", "95% CCI"]
    if len(chains) > 1:
        header.append("R-hat")
    header += [f"acf{l}" for l in range(1, 6)]
    rows = []
    csv_lines = [",".join(["parameter", "median", "sd", "cci_low", "cci_high",
                           "rhat"] + [f"acf{l}" for l in range(1, 6)])]
    max_lag = min(5, chains[0].n_draws - 1)
    for name in names:
        s = diagnostics.summarize(chains[0], name)
        acf = diagnostics.autocorr(chains[0], name, max_lag=max_lag)
        acf = np.concatenate([acf[1:], np.full(5 - max_lag, np.nan)])
        rhat = (diagnostics.gelman_rubin(chains, name)
                if len(chains) > 1 else np.nan)
        row = [name, f"{s.median:.3f}", f"{s.sd:.3f}",
               f"[{s.cci_low:.3f}, {s.cci_high:.3f}]"]
        if len(chains) > 1:
            row.append(f"{rhat:.3f}")
        row += [f"{a:.2f}" for a in acf]
        rows.append(row)
        csv_lines.append(",".join(
            [name, repr(s.median), repr(s.sd), repr(s.cci_low),
             repr(s.cci_high), "" if np.isnan(rhat) else repr(rhat)]
            + ["" if np.isnan(a) else repr(a) for a in acf]))
    print(_fmt_table(rows, header))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "diagnostics.csv").write_text("\n".join(csv_lines) + "\n")
        print(f"\nwrote diagnostics.csv to {out}")
    return 0


def _decode_dataset(data: Dataset, chain: Chain) -> Dataset:
    """Annotate a dataset with decoded states from posterior-median params."""
    med_mean = np.median(chain.emiss_mean, axis=0)
    med_var = np.median(chain.emiss_var, axis=0)
    params = EmissionPointParams(mean=med_mean, var=med_var)
    tpm = np.median(chain.gamma_draws(), axis=0)
    tpm = tpm / tpm.sum(axis=1, keepdims=True)
    delta = InitialDistribution(stationary_distribution(tpm))
    decoded = []
    for s in data.subjects:
        path, _ = decode_states(s, tpm, delta, params)
        decoded.append(SubjectSeries(obs=s.obs, true_states=path))
    return Dataset(subjects=tuple(decoded))


def cmd_ppc(args) -> int:
    cfg = load_config(args.config)
    seed = _resolve_seed(cfg, args)
    out = _resolve_out(cfg, args)
    chain = storage.read_chain_csv(args.chain)
    data = storage.read_dataset_csv(args.data)
    if data.n_dep != chain.spec.n_dep:
        raise ConfigError(f"dataset has {data.n_dep} variables but the chain "
                          f"was fit with {chain.spec.n_dep}")
    pc = cfg.get("ppc") or {}
    n_draws = int(pc.get("n_draws", 2000))
    n_periods = int(pc.get("n_periods", 3))
    q_var = float(pc.get("q_var", 0.1))
    n_occ = min(s.n_occasions for s in data.subjects)
    if not data.has_states():
        log.info("dataset has no state annotations; decoding first")
        data = _decode_dataset(data, chain)
    data.validate_states(chain.spec.m)
    rng = substream(seed, "ppc")
    reps = ppc.ppc_replicates(chain, n_draws, data.n_subjects, n_occ, rng,
                              q_var=q_var)
    results = (ppc.ppc_emission_means(data, reps, m=chain.spec.m)
               + ppc.ppc_total_variance(data, reps)
               + ppc.ppc_tpm_homogeneity(data, reps, n_periods=n_periods,
                                         m=chain.spec.m))
    lines = ["statistic,observed,replicate_mean,p_posterior,two_sided_p"]
    rows = []
    for r in results:
        rep_mean = float(np.nanmean(r.replicates))
        lines.append(f"{r.name},{r.observed!r},{rep_mean!r},"
                     f"{r.p_posterior!r},{r.two_sided!r}")
        rows.append([r.name, f"{r.observed:.3f}", f"{rep_mean:.3f}",
                     f"{r.p_posterior:.3f}", f"{r.two_sided:.3f}"])
    (out / "ppc.csv").write_text("\n".join(lines) + "\n")
    cfg["seed"] = seed
    cfg["out"] = str(out)
    storage.write_effective_config(out, cfg)
    print(_fmt_table(rows, ["statistic", "observed", "replicate mean",
                            "p_posterior", "two_sided_p"]))
    print(f"\nwrote ppc.csv ({len(results)} statistics, {n_draws} replicates) to {out}")
    return 0


def cmd_metrics(args) -> int:
    root = Path(args.records)
    if not root.exists():
        raise ConfigError(f"records directory not found: {root}")
    files = sorted(root.glob("iterations/*/r*.json")) or sorted(root.glob("r*.json"))
    if not files:
        raise ConfigError(f"no iteration records under {root}")
    by_scenario: dict[str, list[study.IterationResult]] = {}
    for f in files:
        rec = study.load_iteration(f)
        by_scenario.setdefault(rec.scenario_id, []).append(rec)
    reports = []
    for sid in sorted(by_scenario):
        records = sorted(by_scenario[sid], key=lambda r: r.iteration)
        ok = [r for r in records if r.ok]
        if len(ok) < 2:
            log.warning("scenario %s: <2 successful iterations, skipped", sid)
            continue
        names = sorted(ok[0].estimates, key=study.param_sort_key)
        truths = {n: ok[0].estimates[n].truth for n in names}
        reports.append(study.evaluate_metrics(records, truths, sid))
    out = Path(args.out) if args.out else root
    out.mkdir(parents=True, exist_ok=True)
    study.write_results_csv(out / "results.csv", reports)
    print(f"aggregated {sum(len(v) for v in by_scenario.values())} records "
          f"from {len(by_scenario)} scenario(s) into {out / 'results.csv'}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlhmm",
                     description="Multilevel hidden Markov models: simulate, "
                                 "fit, and evaluate at scale.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="YAML config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="override the output dir")

    p = sub.add_parser("simulate", help="generate datasets for one scenario")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the model to one dataset")
    common(p)
    p.add_argument("--data", required=True, help="dataset CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("study", help="run a simulation study grid")
    common(p)
    p.add_argument("--parallel", type=int, default=None,
                   help="number of worker processes")
    p.add_argument("--resume", action=argparse.BooleanOptionalAction,
                   default=None, help="reuse completed iterations")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("diagnose", help="posterior summaries and convergence")
    p.add_argument("chains", nargs="+", help="chain CSV file(s)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("ppc", help="posterior predictive checks")
    common(p)
    p.add_argument("--chain", required=True, help="chain CSV")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.set_defaults(func=cmd_ppc)

    p = sub.add_parser("metrics", help="aggregate iteration records")
    p.add_argument("--records", required=True,
                   help="study output dir (or a dir of r*.json records)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # numerical/runtime failures
        print(f"failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
