"""Data generation: subject-level parameters and observation sequences.

A dataset for one (scenario, iteration) cell is produced in three steps per
subject: draw a subject TPM around the group intercepts, draw subject means
around the group means, then walk the latent chain and emit Gaussian
observations conditioned on the visited states.

Each (scenario, iteration, subject) tuple gets its own random substream (see
:mod:`mlhmm.rng`), so regenerating any single subject, iteration, or scenario
is bit-reproducible regardless of execution order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import markov_walk
from .model import (Dataset, GroupParams, SubjectParams, SubjectSeries,
                    mnl_row, stationary_distribution, validate_tpm)
from .rng import substream


@dataclass(frozen=True)
class InitialDistribution:
    """Distribution of the latent state at the first occasion."""

    delta: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float).ravel()
        if np.any(d < 0) or abs(d.sum() - 1.0) > 1e-12:
            raise ValueError("delta must be nonnegative and sum to 1 within 1e-12")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "delta", d)


@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of the simulation grid.

    ``zeta`` and ``q_var`` record the between-subject variances the group
    parameters were built with (the matrices in ``group`` are authoritative;
    these scalars feed scenario ids and reports). ``delta`` overrides the
    default initial distribution, which is the stationary distribution of
    each subject's own TPM.
    """

    id: str
    group: GroupParams
    n_subjects: int
    n_occasions: int
    zeta: float
    q_var: float
    n_sim: int
    seed: int
    delta: InitialDistribution | None = None

    def __post_init__(self):
        if self.n_subjects < 1:
            raise ValueError("n_subjects must be >= 1")
        if self.n_occasions < 2:
            raise ValueError("n_occasions must be >= 2")
        if self.zeta < 0 or self.q_var < 0:
            raise ValueError("zeta and q_var must be nonnegative")
        if self.n_sim < 1:
            raise ValueError("n_sim must be >= 1")
        if self.delta is not None and self.delta.delta.shape[0] != self.group.m:
            raise ValueError("delta length must equal the number of states")


def draw_subject_tpm(group: GroupParams, rng: np.random.Generator) -> np.ndarray:
    """Draw one subject's TPM around the group-level intercepts.

    Per row i, deviations psi_ij ~ N(0, tpm_rand_var[i, j]) are added to the
    group intercepts and pushed through the multinomial-logit link.
    """
    psi = rng.normal(0.0, np.sqrt(group.tpm_rand_var))
    alpha = group.tpm_intercepts + psi
    return np.vstack([mnl_row(a) for a in alpha])


def draw_subject_means(group: GroupParams, rng: np.random.Generator) -> np.ndarray:
    """Draw one subject's state-dependent means around the group means."""
    u = rng.normal(0.0, np.sqrt(group.emiss_rand_var))
    return group.emiss_mean + u


def simulate_states(tpm, n_occasions: int, delta: InitialDistribution,
                    rng: np.random.Generator) -> np.ndarray:
    """Simulate a latent state sequence (1-based) of the given length."""
    tpm = np.asarray(tpm, dtype=float)
    check = validate_tpm(tpm)
    if not check.ok:
        raise ValueError(f"invalid tpm: {check.message}")
    u = rng.random(n_occasions)
    return markov_walk(tpm, delta.delta, u) + 1


def simulate_observations(states, subj: SubjectParams, group: GroupParams,
                          rng: np.random.Generator) -> np.ndarray:
    """Emit Gaussian observations conditioned on a state sequence.

    obs[t, k] = subj_mean[k, state_t] + eps with eps ~ N(0, resid_var[k, state_t]);
    variables are conditionally independent given the state.
    """
    s = np.asarray(states, dtype=np.int64) - 1
    if s.min() < 0 or s.max() >= group.m:
        raise ValueError("states must lie in 1..m")
    means = subj.subj_mean[:, s].T                      # [n_occ, n_dep]
    sds = np.sqrt(group.emiss_resid_var[:, s]).T
    return means + rng.standard_normal(means.shape) * sds


def _subject_stream(scenario: ScenarioSpec, iteration_index: int, subject: int):
    return substream(scenario.seed, "sim", scenario.id, iteration_index, subject)


def simulate_dataset(scenario: ScenarioSpec, iteration_index: int
                     ) -> tuple[Dataset, list[SubjectParams]]:
    """Generate a full dataset plus the true subject-level parameters.

    Deterministic given (scenario.seed, scenario.id, iteration_index); the
    returned dataset carries the simulated latent paths in ``true_states``.
    """
    group = scenario.group
    series = []
    subjects = []
    for n in range(scenario.n_subjects):
        rng = _subject_stream(scenario, iteration_index, n)
        tpm = draw_subject_tpm(group, rng)
        subj = SubjectParams(subj_mean=draw_subject_means(group, rng), tpm=tpm)
        delta = scenario.delta
        if delta is None:
            delta = InitialDistribution(stationary_distribution(tpm))
        states = simulate_states(tpm, scenario.n_occasions, delta, rng)
        obs = simulate_observations(states, subj, group, rng)
        series.append(SubjectSeries(obs=obs, true_states=states))
        subjects.append(subj)
    return Dataset(subjects=tuple(series)), subjects
