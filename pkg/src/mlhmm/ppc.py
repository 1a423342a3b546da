"""Posterior predictive checks: emission means, total variance, TPM stability.

Replicate datasets are generated from posterior draws of the group-level
parameters; each check compares one statistic of the observed data against
the distribution of the same statistic over the replicates. ``p_posterior``
is the proportion of replicate statistics at or above the observed value;
because that direction is a convention, the two-sided companion
``2 * min(p, 1 - p)`` is reported alongside it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .model import Dataset, GroupParams, SubjectParams, SubjectSeries, stationary_distribution
from .sampler import Chain
from .simulate import (InitialDistribution, draw_subject_means,
                       draw_subject_tpm, simulate_observations, simulate_states)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PpcResult:
    """One statistic's observed value against its replicate distribution."""

    name: str
    observed: float
    replicates: np.ndarray
    p_posterior: float

    @property
    def two_sided(self) -> float:
        return 2.0 * min(self.p_posterior, 1.0 - self.p_posterior)


def _result(name: str, observed: float, reps: np.ndarray) -> PpcResult:
    reps = np.asarray(reps, dtype=float)
    valid = reps[~np.isnan(reps)]
    p = float(np.mean(valid >= observed)) if valid.size else np.nan
    return PpcResult(name=name, observed=float(observed), replicates=reps,
                     p_posterior=p)


def replicate_datasets(group_draws, n_subjects: int, n_occasions: int,
                       rng: np.random.Generator) -> list[Dataset]:
    """Simulate one dataset per group-parameter draw (with true states)."""
    out = []
    for group in group_draws:
        series = []
        for _ in range(n_subjects):
            tpm = draw_subject_tpm(group, rng)
            subj = SubjectParams(subj_mean=draw_subject_means(group, rng), tpm=tpm)
            delta = InitialDistribution(stationary_distribution(tpm))
            states = simulate_states(tpm, n_occasions, delta, rng)
            obs = simulate_observations(states, subj, group, rng)
            series.append(SubjectSeries(obs=obs, true_states=states))
        out.append(Dataset(subjects=tuple(series)))
    return out


def replication_group(group: GroupParams, q_var: float = 0.1) -> GroupParams:
    """Adapt one posterior draw for the replicate generator.

    The generator requires a single between-subject variance per variable, so
    the draw's random variances are averaged across states; the TPM
    between-subject variance is not recoverable the same way and is fixed at
    ``q_var`` (small heterogeneity by default).
    """
    avg = group.emiss_rand_var.mean(axis=1, keepdims=True)
    return GroupParams(
        emiss_mean=group.emiss_mean,
        emiss_rand_var=np.broadcast_to(avg, group.emiss_mean.shape).copy(),
        emiss_resid_var=group.emiss_resid_var,
        tpm_intercepts=group.tpm_intercepts,
        tpm_rand_var=np.full_like(group.tpm_rand_var, q_var))


def ppc_replicates(chain: Chain, n_draws: int, n_subjects: int,
                   n_occasions: int, rng: np.random.Generator,
                   q_var: float = 0.1) -> list[Dataset]:
    """Replicate datasets from sampled posterior draws of a chain.

    Draws are sampled without replacement when the chain is long enough,
    with replacement otherwise.
    """
    total = chain.n_draws
    replace = total < n_draws
    idx = rng.choice(total, size=n_draws, replace=replace)
    draws = [replication_group(chain.group_params(int(i)), q_var) for i in idx]
    return replicate_datasets(draws, n_subjects, n_occasions, rng)


def _require_states(dataset: Dataset, what: str):
    if not dataset.has_states():
        raise ValueError(f"{what} needs state annotations; decode the dataset "
                         "first (inference.decode_states) or supply true states")


def _n_states(dataset: Dataset) -> int:
    return int(max(s.true_states.max() for s in dataset.subjects))


def state_mean_stats(dataset: Dataset, m: int) -> np.ndarray:
    """Pooled state-conditional sample means: [n_dep, m] (NaN if unvisited)."""
    sums = np.zeros((dataset.n_dep, m))
    counts = np.zeros(m)
    for s in dataset.subjects:
        oh = (s.true_states[:, None] == np.arange(1, m + 1)).astype(float)
        sums += s.obs.T @ oh
        counts += oh.sum(axis=0)
    with np.errstate(invalid="ignore"):
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def ppc_emission_means(observed: Dataset, replicates: list[Dataset],
                       m: int | None = None) -> list[PpcResult]:
    """Check the pooled state-conditional mean of every (variable, state)."""
    _require_states(observed, "the emission-mean check")
    m = m or _n_states(observed)
    obs_stat = state_mean_stats(observed, m)
    rep_stats = np.stack([state_mean_stats(r, m) for r in replicates])
    out = []
    for k in range(observed.n_dep):
        for s in range(m):
            out.append(_result(f"emiss_mean.{k + 1}.{s + 1}",
                               obs_stat[k, s], rep_stats[:, k, s]))
    return out


def total_variance_stats(dataset: Dataset) -> np.ndarray:
    """Pooled per-variable variance over all subjects and occasions."""
    pooled = np.vstack([s.obs for s in dataset.subjects])
    return pooled.var(axis=0, ddof=1)


def ppc_total_variance(observed: Dataset, replicates: list[Dataset]
                       ) -> list[PpcResult]:
    """Check the pooled total variance of every variable."""
    obs_stat = total_variance_stats(observed)
    rep_stats = np.stack([total_variance_stats(r) for r in replicates])
    return [_result(f"total_var.{k + 1}", obs_stat[k], rep_stats[:, k])
            for k in range(observed.n_dep)]


def empirical_tpm(states) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalized transition frequencies and the raw count matrix.

    Rows whose origin state never occurs before the final occasion come back
    as NaN (undefined frequencies).
    """
    s = np.asarray(states, dtype=np.int64)
    if s.size < 2:
        raise ValueError("need at least two occasions")
    m = int(s.max())
    counts = np.bincount((s[:-1] - 1) * m + (s[1:] - 1),
                         minlength=m * m).reshape(m, m).astype(float)
    row_tot = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        tpm = np.where(row_tot > 0, counts / row_tot, np.nan)
    return tpm, counts


def _period_tpms(dataset: Dataset, n_periods: int, period_len: int, m: int
                 ) -> np.ndarray:
    """Pooled per-period transition frequencies: [n_periods, m, m]."""
    out = np.empty((n_periods, m, m))
    for p in range(n_periods):
        counts = np.zeros((m, m))
        for s in dataset.subjects:
            seg = s.true_states[p * period_len:(p + 1) * period_len]
            counts += np.bincount((seg[:-1] - 1) * m + (seg[1:] - 1),
                                  minlength=m * m).reshape(m, m)
        row_tot = counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[p] = np.where(row_tot > 0, counts / row_tot, np.nan)
    return out


def ppc_tpm_homogeneity(observed: Dataset, replicates: list[Dataset],
                        n_periods: int = 3, m: int | None = None
                        ) -> list[PpcResult]:
    """Check per-period transition frequencies against replicates.

    The series is cut into ``n_periods`` equal blocks (a trailing remainder is
    truncated with a warning); cells whose origin state is unvisited in the
    observed period are excluded.
    """
    _require_states(observed, "the homogeneity check")
    m = m or _n_states(observed)
    n_occ = min(s.n_occasions for s in observed.subjects)
    period_len = n_occ // n_periods
    if period_len < 2:
        raise ValueError("periods too short for transition frequencies")
    if n_occ % n_periods:
        log.warning("series length %d not divisible by %d periods; "
                    "truncating %d trailing occasions", n_occ, n_periods,
                    n_occ % n_periods)
    obs_stat = _period_tpms(observed, n_periods, period_len, m)
    rep_stats = np.stack([_period_tpms(r, n_periods, period_len, m)
                          for r in replicates])
    out = []
    for p in range(n_periods):
        for i in range(m):
            for j in range(m):
                if np.isnan(obs_stat[p, i, j]):
                    log.warning("period %d row %d unvisited in observed data; "
                                "cell excluded", p + 1, i + 1)
                    continue
                out.append(_result(f"tpm_p{p + 1}.{i + 1}.{j + 1}",
                                   obs_stat[p, i, j], rep_stats[:, p, i, j]))
    return out
