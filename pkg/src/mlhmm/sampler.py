"""MCMC estimation of the multilevel HMM.

One sweep per iteration:

1. draw every subject's latent state path exactly by forward filtering and
   backward sampling (FFBS), given that subject's current means and TPM;
2. conjugate Gaussian updates for subject means, group means, between-subject
   variances (normal-inverse-gamma) and residual variances (inverse-gamma);
3. random-walk Metropolis on the subjects' multinomial-logit TPM intercepts,
   then normal / inverse-gamma full conditionals for the group intercepts and
   their between-subject variances.

The fitted model conditions the first occasion's state on a fixed uniform
initial distribution. This keeps the TPM full conditionals exact (a
TPM-dependent initial distribution would enter the Metropolis target), and
with hundreds of occasions per subject the initial occasion carries no
practical information.

A single chain is strictly sequential; separate chains (and separate fits)
are independent and may run concurrently.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2

from ._kernels import backward_sample, forward_filter
from .inference import EmissionPointParams, emission_logdensity_matrix
from .model import (Dataset, GroupParams, ModelSpec, SubjectSeries,
                    intercepts_from_row, validate_tpm)
from .rng import substream
from .simulate import InitialDistribution

log = logging.getLogger(__name__)


class SamplerError(RuntimeError):
    """Numerical failure inside a sweep; carries the sweep index and block."""

    def __init__(self, sweep: int, block: str, detail: str = "non-finite draw"):
        self.sweep = sweep
        self.block = block
        super().__init__(f"sampler failed at sweep {sweep} in {block} block: {detail}")


@dataclass(frozen=True)
class Hyperpriors:
    """Hyper-prior settings for all parameter blocks.

    Emission means use a normal-inverse-gamma prior: group mean ~
    N(mu0, rand_var / k0) and between-subject variance ~ IG(nu/2, nu*v/2).
    Residual variances use IG(alpha0, beta0). TPM group intercepts are
    N(tpm_int_prior_mean, tpm_int_prior_var) a priori and their
    between-subject variances IG(tpm_var_prior_shape, tpm_var_prior_scale).
    """

    mu0: np.ndarray                     # [n_dep, m]
    k0: float = 1.0
    nu: float = 1.0
    v: float = 1.0
    alpha0: float = 0.1
    beta0: float = 0.1
    tpm_int_prior_mean: float = 0.0
    tpm_int_prior_var: float = 10.0
    tpm_var_prior_shape: float = 0.5
    tpm_var_prior_scale: float = 0.5

    def __post_init__(self):
        mu0 = np.asarray(self.mu0, dtype=float)
        if mu0.ndim != 2 or not np.all(np.isfinite(mu0)):
            raise ValueError("mu0 must be a finite [n_dep, m] matrix")
        object.__setattr__(self, "mu0", mu0)
        for name in ("k0", "nu", "v", "alpha0", "beta0", "tpm_int_prior_var",
                     "tpm_var_prior_shape", "tpm_var_prior_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class StartValues:
    """Initial values for one chain."""

    emiss_mean: np.ndarray   # [n_dep, m]
    emiss_var: np.ndarray    # [n_dep, m] residual variances
    tpm: np.ndarray          # [m, m]

    def __post_init__(self):
        mean = np.asarray(self.emiss_mean, dtype=float)
        var = np.asarray(self.emiss_var, dtype=float)
        tpm = np.asarray(self.tpm, dtype=float)
        if np.any(var <= 0):
            raise ValueError("start variances must be strictly positive")
        check = validate_tpm(tpm)
        if not check.ok:
            raise ValueError(f"start tpm invalid: {check.message}")
        object.__setattr__(self, "emiss_mean", mean)
        object.__setattr__(self, "emiss_var", var)
        object.__setattr__(self, "tpm", tpm)


@dataclass(frozen=True)
class McmcConfig:
    """Sweep counts, thinning, seeding and chain multiplicity."""

    n_iter: int
    burn_in: int
    thin: int = 1
    seed: int = 0
    start: StartValues | None = None
    n_chains: int = 1

    def __post_init__(self):
        if self.burn_in < 0 or self.burn_in >= self.n_iter:
            raise ValueError("need 0 <= burn_in < n_iter")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")

    @property
    def n_draws(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin


@dataclass
class Chain:
    """Stored (post burn-in, thinned) draws of one MCMC chain.

    Group-level draws are indexed [draw, ...]; subject-level draws carry an
    extra subject axis. ``accept_rate[i]`` is the Metropolis acceptance rate
    for TPM row i + 1 over all sweeps and subjects.
    """

    spec: ModelSpec
    emiss_mean: np.ndarray    # [n_draws, n_dep, m]
    emiss_varmu: np.ndarray   # [n_draws, n_dep, m] between-subject variances
    emiss_var: np.ndarray     # [n_draws, n_dep, m] residual variances
    tpm_int: np.ndarray       # [n_draws, m, m-1]
    psi_var: np.ndarray       # [n_draws, m, m-1]
    subj_mean: np.ndarray     # [n_draws, N, n_dep, m]
    subj_int: np.ndarray      # [n_draws, N, m, m-1]
    loglik: np.ndarray        # [n_draws]
    accept_rate: np.ndarray   # [m]
    meta: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.emiss_mean.shape[0]

    def gamma_draws(self) -> np.ndarray:
        """Group-level transition probabilities per draw: [n_draws, m, m]."""
        z = np.concatenate([np.zeros(self.tpm_int.shape[:2] + (1,)),
                            self.tpm_int], axis=2)
        z = z - z.max(axis=2, keepdims=True)
        p = np.exp(z)
        return p / p.sum(axis=2, keepdims=True)

    def parameter_names(self) -> list[str]:
        k_dim, m = self.spec.n_dep, self.spec.m
        names = []
        for stem in ("emiss_mean", "emiss_varmu", "emiss_var"):
            names += [f"{stem}.{k + 1}.{s + 1}" for k in range(k_dim)
                      for s in range(m)]
        names += [f"alpha.{i + 1}.{j + 2}" for i in range(m) for j in range(m - 1)]
        names += [f"psi_var.{i + 1}.{j + 2}" for i in range(m) for j in range(m - 1)]
        names += [f"gamma.{i + 1}.{j + 1}" for i in range(m) for j in range(m)]
        names.append("loglik")
        return names

    def parameter(self, name: str) -> np.ndarray:
        """Draws of one named scalar parameter (1-based indices in the name)."""
        if name == "loglik":
            return self.loglik
        parts = name.split(".")
        stem = parts[0]
        try:
            if stem in ("emiss_mean", "emiss_varmu", "emiss_var"):
                k, s = int(parts[1]) - 1, int(parts[2]) - 1
                return getattr(self, stem)[:, k, s]
            if stem in ("alpha", "psi_var"):
                i, j = int(parts[1]) - 1, int(parts[2]) - 2
                arr = self.tpm_int if stem == "alpha" else self.psi_var
                if j < 0:
                    raise IndexError
                return arr[:, i, j]
            if stem == "gamma":
                i, j = int(parts[1]) - 1, int(parts[2]) - 1
                return self.gamma_draws()[:, i, j]
        except (IndexError, ValueError):
            raise KeyError(f"bad parameter name {name!r}") from None
        raise KeyError(f"unknown parameter {name!r}")

    def group_params(self, draw: int) -> GroupParams:
        """Group-level parameters of one stored draw."""
        return GroupParams(
            emiss_mean=self.emiss_mean[draw],
            emiss_rand_var=self.emiss_varmu[draw],
            emiss_resid_var=self.emiss_var[draw],
            tpm_intercepts=self.tpm_int[draw],
            tpm_rand_var=self.psi_var[draw],
        )


def _inv_gamma(rng: np.random.Generator, shape, scale):
    """Inverse-gamma draws: X ~ IG(shape, scale) via 1 / Gamma(shape, 1/scale)."""
    return 1.0 / rng.gamma(shape, 1.0 / np.asarray(scale, dtype=float))


def generate_start_values(group_ref: GroupParams, rng: np.random.Generator
                          ) -> StartValues:
    """Random starting values around a reference parameter set.

    Emission means get i.i.d. U(-0.2, 0.2) jitter per cell; start TPMs draw
    each self-transition from U(0.5, 0.8) with the off-diagonal mass split
    evenly; start residual variances copy the reference.
    """
    mean = group_ref.emiss_mean + rng.uniform(-0.2, 0.2, group_ref.emiss_mean.shape)
    m = group_ref.m
    diag = rng.uniform(0.5, 0.8, m)
    tpm = np.empty((m, m))
    for i in range(m):
        tpm[i] = (1.0 - diag[i]) / (m - 1)
        tpm[i, i] = diag[i]
    return StartValues(emiss_mean=mean,
                       emiss_var=group_ref.emiss_resid_var.copy(),
                       tpm=tpm)


def state_conditional_means(dataset: Dataset, m: int) -> np.ndarray:
    """Pooled per-state sample means from annotated latent states."""
    n_dep = dataset.n_dep
    sums = np.zeros((n_dep, m))
    counts = np.zeros(m)
    for s in dataset.subjects:
        oh = (s.true_states[:, None] == np.arange(1, m + 1)).astype(float)
        sums += s.obs.T @ oh
        counts += oh.sum(axis=0)
    counts = np.maximum(counts, 1.0)
    return sums / counts


def partition_means(dataset: Dataset, m: int, seed: int = 0) -> np.ndarray:
    """Rough per-state sample means from a k-means partition of pooled data.

    Used when no annotated states exist. Clusters are ordered by their mean on
    the first variable so the assignment to states is deterministic.
    """
    pooled = np.vstack([s.obs for s in dataset.subjects])
    centroids, labels = kmeans2(pooled, m, minit="++",
                                seed=np.random.default_rng(seed))
    order = np.argsort(centroids[:, 0])
    means = np.empty((dataset.n_dep, m))
    for rank, c in enumerate(order):
        sel = pooled[labels == c]
        means[:, rank] = sel.mean(axis=0) if sel.size else centroids[c]
    return means


def default_hyperpriors(dataset: Dataset, spec: ModelSpec, **overrides) -> Hyperpriors:
    """Hyper-priors with mu0 set to per-state sample means.

    State-conditional means are used when the dataset carries annotated
    states; otherwise a k-means partition stands in.
    """
    if dataset.has_states():
        mu0 = state_conditional_means(dataset, spec.m)
    else:
        mu0 = partition_means(dataset, spec.m)
    return Hyperpriors(mu0=mu0, **overrides)


def reference_from_data(dataset: Dataset, spec: ModelSpec) -> GroupParams:
    """Data-driven reference parameters for start-value generation."""
    if dataset.has_states():
        means = state_conditional_means(dataset, spec.m)
    else:
        means = partition_means(dataset, spec.m)
    pooled_var = np.vstack([s.obs for s in dataset.subjects]).var(axis=0, ddof=1)
    resid = np.tile(np.maximum(pooled_var, 1e-6)[:, None], (1, spec.m))
    tpm = np.full((spec.m, spec.m), 0.3 / (spec.m - 1))
    np.fill_diagonal(tpm, 0.7)
    intercepts = np.vstack([intercepts_from_row(r) for r in tpm])
    return GroupParams(emiss_mean=means,
                       emiss_rand_var=np.ones_like(means),
                       emiss_resid_var=resid,
                       tpm_intercepts=intercepts,
                       tpm_rand_var=np.ones((spec.m, spec.m - 1)))


def sample_states_ffbs(series: SubjectSeries, tpm, delta: InitialDistribution,
                       params: EmissionPointParams, rng: np.random.Generator
                       ) -> np.ndarray:
    """Exact joint draw of one subject's state path (1-based) given parameters."""
    tpm = np.asarray(tpm, dtype=float)
    log_dens = emission_logdensity_matrix(series.obs, params)
    alphan, _ = forward_filter(log_dens, tpm, delta.delta)
    u = rng.random(series.n_occasions)
    return backward_sample(alphan, tpm, u) + 1


def update_emission_block(dataset: Dataset, states: list[np.ndarray],
                          group_mean, rand_var, resid_var,
                          hyper: Hyperpriors, rng: np.random.Generator):
    """One Gibbs pass over the emission hierarchy.

    ``states`` holds each subject's current 1-based path. Returns
    (subj_mean [N, n_dep, m], group_mean, rand_var, resid_var). A state with
    zero occupancy across all subjects reduces every full conditional to its
    prior (logged once per call site via the module logger).
    """
    group_mean = np.asarray(group_mean, dtype=float)
    cnt, ys, y2s = _occupancy_stats(dataset, states, group_mean.shape[1])
    return _emission_draw(cnt, ys, y2s, group_mean, np.asarray(rand_var, float),
                          np.asarray(resid_var, float), hyper, rng)


def _occupancy_stats(dataset: Dataset, states, m: int):
    n = dataset.n_subjects
    n_dep = dataset.n_dep
    cnt = np.empty((n, m))
    ys = np.empty((n, n_dep, m))
    y2s = np.empty((n, n_dep, m))
    lab = np.arange(1, m + 1)
    for i, s in enumerate(dataset.subjects):
        oh = (np.asarray(states[i])[:, None] == lab).astype(float)
        cnt[i] = oh.sum(axis=0)
        ys[i] = s.obs.T @ oh
        y2s[i] = (s.obs ** 2).T @ oh
    return cnt, ys, y2s


def _emission_draw(cnt, ys, y2s, group_mean, rand_var, resid_var,
                   hyper: Hyperpriors, rng: np.random.Generator,
                   warned_empty: set | None = None):
    n = cnt.shape[0]
    empty = np.nonzero(cnt.sum(axis=0) == 0)[0]
    for i in empty:
        if warned_empty is None or int(i) not in warned_empty:
            log.warning("state %d has zero occupancy; drawing from the prior",
                        int(i) + 1)
            if warned_empty is not None:
                warned_empty.add(int(i))

    # Subject means: normal full conditional around the group mean.
    prec = 1.0 / rand_var[None] + cnt[:, None, :] / resid_var[None]
    mu = (group_mean[None] / rand_var[None] + ys / resid_var[None]) / prec
    subj_mean = mu + rng.standard_normal(mu.shape) / np.sqrt(prec)

    # Group means and between-subject variances: normal-inverse-gamma.
    bbar = subj_mean.mean(axis=0)
    ssb = ((subj_mean - bbar) ** 2).sum(axis=0)
    kn = hyper.k0 + n
    shape = (hyper.nu + n) / 2.0
    scale = (hyper.nu * hyper.v + ssb
             + (hyper.k0 * n / kn) * (bbar - hyper.mu0) ** 2) / 2.0
    new_rand_var = _inv_gamma(rng, shape, scale)
    post_mean = (hyper.k0 * hyper.mu0 + n * bbar) / kn
    new_group_mean = rng.normal(post_mean, np.sqrt(new_rand_var / kn))

    # Residual variances: inverse-gamma with the pooled within-state SS.
    n_state = cnt.sum(axis=0)
    ss = (y2s - 2.0 * subj_mean * ys + cnt[:, None, :] * subj_mean ** 2).sum(axis=0)
    ss = np.maximum(ss, 0.0)
    new_resid = _inv_gamma(rng, hyper.alpha0 + n_state / 2.0, hyper.beta0 + ss / 2.0)
    return subj_mean, new_group_mean, new_rand_var, new_resid


def _row_loglik(a, counts_row):
    """Multinomial-logit log-likelihood of intercept rows given counts.

    a: [N, m-1] intercepts, counts_row: [N, m] transition counts out of one
    origin state. Baseline target has implicit intercept 0.
    """
    zmax = np.maximum(a.max(axis=1), 0.0)
    lse = zmax + np.log(np.exp(-zmax) + np.exp(a - zmax[:, None]).sum(axis=1))
    return (counts_row[:, 1:] * a).sum(axis=1) - counts_row.sum(axis=1) * lse


def update_tpm_block(trans_counts, subj_int, group_int, psi_var,
                     hyper: Hyperpriors, rng: np.random.Generator,
                     prop_sd=None):
    """One pass over the TPM hierarchy.

    trans_counts: [N, m, m] transition counts from the sampled paths.
    Subject intercept rows move by random-walk Metropolis against the
    multinomial-logit likelihood times their N(group_int, psi_var) prior;
    group intercepts and psi_var then follow by conjugacy. Returns
    (subj_int, group_int, psi_var, accepted[m]) with accepted counting
    accepted subject-row proposals per origin state.
    """
    counts = np.asarray(trans_counts, dtype=float)
    a = np.array(subj_int, dtype=float)
    abar = np.asarray(group_int, dtype=float)
    psiv = np.asarray(psi_var, dtype=float)
    n, m = counts.shape[0], counts.shape[1]
    if prop_sd is None:
        prop_sd = np.ones((m, m - 1))
    accepted = np.zeros(m, dtype=np.int64)

    for i in range(m):
        cur = a[:, i, :]
        prop = cur + rng.standard_normal(cur.shape) * prop_sd[i]
        ll_cur = _row_loglik(cur, counts[:, i, :])
        ll_prop = _row_loglik(prop, counts[:, i, :])
        pr_cur = -0.5 * ((cur - abar[i]) ** 2 / psiv[i]).sum(axis=1)
        pr_prop = -0.5 * ((prop - abar[i]) ** 2 / psiv[i]).sum(axis=1)
        log_r = ll_prop + pr_prop - ll_cur - pr_cur
        take = np.log(rng.random(n)) < log_r
        a[take, i, :] = prop[take]
        accepted[i] = int(take.sum())

    post_prec = n / psiv + 1.0 / hyper.tpm_int_prior_var
    post_mean = (a.sum(axis=0) / psiv
                 + hyper.tpm_int_prior_mean / hyper.tpm_int_prior_var) / post_prec
    abar = rng.normal(post_mean, 1.0 / np.sqrt(post_prec))
    ss = ((a - abar) ** 2).sum(axis=0)
    psiv = _inv_gamma(rng, hyper.tpm_var_prior_shape + n / 2.0,
                      hyper.tpm_var_prior_scale + ss / 2.0)
    return a, abar, psiv, accepted


def _subject_tpms(subj_int):
    """Row-stochastic TPMs from subject intercepts: [N, m, m]."""
    n, m, _ = subj_int.shape
    z = np.concatenate([np.zeros((n, m, 1)), subj_int], axis=2)
    z = z - z.max(axis=2, keepdims=True)
    p = np.exp(z)
    return p / p.sum(axis=2, keepdims=True)


def _check_finite(sweep: int, block: str, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise SamplerError(sweep, block)


def run_mcmc(dataset: Dataset, spec: ModelSpec, hyper: Hyperpriors,
             config: McmcConfig, ref_group: GroupParams | None = None,
             flat_likelihood: bool = False) -> list[Chain]:
    """Fit the multilevel HMM; returns one Chain per configured chain.

    Starting values come from ``config.start`` for the first chain; further
    chains (or all chains, when no start is given) draw fresh starts around
    ``ref_group`` or, failing that, a data-driven reference. With
    ``flat_likelihood`` the data are ignored in every block, which turns the
    sweep into an exact sampler of the prior (used for validation).
    """
    dataset.validate_states(spec.m)
    if dataset.n_dep != spec.n_dep:
        raise ValueError("dataset n_dep does not match the model spec")
    ref = ref_group
    if ref is None and config.start is not None:
        ref = GroupParams(
            emiss_mean=config.start.emiss_mean,
            emiss_rand_var=np.ones_like(config.start.emiss_mean),
            emiss_resid_var=config.start.emiss_var,
            tpm_intercepts=np.vstack([intercepts_from_row(r) for r in config.start.tpm]),
            tpm_rand_var=np.ones((spec.m, spec.m - 1)))
    if ref is None and flat_likelihood:
        ref = GroupParams(
            emiss_mean=np.zeros((spec.n_dep, spec.m)),
            emiss_rand_var=np.ones((spec.n_dep, spec.m)),
            emiss_resid_var=np.ones((spec.n_dep, spec.m)),
            tpm_intercepts=np.zeros((spec.m, spec.m - 1)),
            tpm_rand_var=np.ones((spec.m, spec.m - 1)))
    if ref is None:
        ref = reference_from_data(dataset, spec)
    return [_run_single_chain(dataset, spec, hyper, config, c, ref, flat_likelihood)
            for c in range(config.n_chains)]


def _run_single_chain(dataset, spec, hyper, config, chain_index, ref,
                      flat_likelihood):
    m, n_dep = spec.m, spec.n_dep
    n = dataset.n_subjects
    rng = substream(config.seed, "chain", chain_index)
    if config.start is not None and chain_index == 0:
        start = config.start
    else:
        start = generate_start_values(ref, substream(config.seed, "start", chain_index))

    beta = start.emiss_mean.copy()
    resid = start.emiss_var.copy()
    varmu = np.full((n_dep, m), hyper.v)
    subj_mean = np.tile(beta, (n, 1, 1))
    abar = np.vstack([intercepts_from_row(r) for r in start.tpm])
    subj_int = np.tile(abar, (n, 1, 1))
    psiv = np.ones((m, m - 1))
    prop_sd = np.ones((m, m - 1))

    n_draws = config.n_draws
    out = Chain(
        spec=spec,
        emiss_mean=np.empty((n_draws, n_dep, m)),
        emiss_varmu=np.empty((n_draws, n_dep, m)),
        emiss_var=np.empty((n_draws, n_dep, m)),
        tpm_int=np.empty((n_draws, m, m - 1)),
        psi_var=np.empty((n_draws, m, m - 1)),
        subj_mean=np.empty((n_draws, n, n_dep, m)),
        subj_int=np.empty((n_draws, n, m, m - 1)),
        loglik=np.empty(n_draws),
        accept_rate=np.zeros(m),
    )

    accept_total = np.zeros(m, dtype=np.int64)
    accept_window = np.zeros(m, dtype=np.int64)
    adapt_every = 50
    states = [None] * n
    warned_empty: set = set(range(m)) if flat_likelihood else set()
    zero_dens = [np.zeros((s.n_occasions, m)) for s in dataset.subjects]

    uniform_delta = np.full(m, 1.0 / m)
    for sweep in range(1, config.n_iter + 1):
        gammas = _subject_tpms(subj_int)

        loglik = 0.0
        counts = np.zeros((n, m, m))
        for idx, series in enumerate(dataset.subjects):
            if flat_likelihood:
                log_dens = zero_dens[idx]
            else:
                params = EmissionPointParams(mean=subj_mean[idx], var=resid)
                log_dens = emission_logdensity_matrix(series.obs, params)
            alphan, ll = forward_filter(log_dens, gammas[idx], uniform_delta)
            path = backward_sample(alphan, gammas[idx], rng.random(series.n_occasions))
            loglik += ll
            states[idx] = path + 1
            counts[idx] = np.bincount(path[:-1] * m + path[1:],
                                      minlength=m * m).reshape(m, m)
        if not np.isfinite(loglik):
            raise SamplerError(sweep, "state")

        if flat_likelihood:
            cnt = np.zeros((n, m))
            ys = np.zeros((n, n_dep, m))
            y2s = np.zeros((n, n_dep, m))
        else:
            cnt, ys, y2s = _occupancy_stats(dataset, states, m)
        subj_mean, beta, varmu, resid = _emission_draw(
            cnt, ys, y2s, beta, varmu, resid, hyper, rng,
            warned_empty=warned_empty)
        _check_finite(sweep, "emission", subj_mean, beta, varmu, resid)

        subj_int, abar, psiv, accepted = update_tpm_block(
            counts, subj_int, abar, psiv, hyper, rng, prop_sd)
        _check_finite(sweep, "tpm", subj_int, abar, psiv)
        accept_total += accepted
        accept_window += accepted

        # Adapt proposal scales during burn-in only (targets 23-44% acceptance);
        # frozen afterwards to preserve detailed balance.
        if sweep <= config.burn_in and sweep % adapt_every == 0:
            rate = accept_window / (n * adapt_every)
            prop_sd[rate < 0.23] *= 0.8
            prop_sd[rate > 0.44] *= 1.25
            accept_window[:] = 0

        offset = sweep - config.burn_in
        if offset > 0 and offset % config.thin == 0:
            d = offset // config.thin - 1
            out.emiss_mean[d] = beta
            out.emiss_varmu[d] = varmu
            out.emiss_var[d] = resid
            out.tpm_int[d] = abar
            out.psi_var[d] = psiv
            out.subj_mean[d] = subj_mean
            out.subj_int[d] = subj_int
            out.loglik[d] = loglik

    out.accept_rate = accept_total / (n * config.n_iter)
    out.meta = {
        "seed": config.seed,
        "chain_index": chain_index,
        "n_iter": config.n_iter,
        "burn_in": config.burn_in,
        "thin": config.thin,
        "flat_likelihood": flat_likelihood,
        "proposal_sd": prop_sd.tolist(),
        "accept_rate": out.accept_rate.tolist(),
        "start_emiss_mean": start.emiss_mean.tolist(),
        "start_tpm": start.tpm.tolist(),
    }
    return out
