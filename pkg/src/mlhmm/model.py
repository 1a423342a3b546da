"""Core domain types and the logit-scale transforms behind row-stochastic TPMs.

All types are immutable after construction and all functions are pure, so
everything here is safe to share across threads and processes.

State indices are 1-based everywhere in the public API (state 1 is the
baseline category of the multinomial-logit transition model).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

ROW_SUM_TOL = 1e-9


def _as_matrix(x, name: str, shape=None) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got ndim={a.ndim}")
    if shape is not None and a.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class ModelSpec:
    """Dimensions of the model: latent states and dependent variables."""

    m: int
    n_dep: int
    state_labels: tuple[str, ...] | None = None
    dep_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"need at least 2 latent states, got m={self.m}")
        if self.n_dep < 1:
            raise ValueError(f"need at least 1 dependent variable, got {self.n_dep}")
        if self.state_labels is not None and len(self.state_labels) != self.m:
            raise ValueError("state_labels length must equal m")
        if self.dep_labels is not None and len(self.dep_labels) != self.n_dep:
            raise ValueError("dep_labels length must equal n_dep")


@dataclass(frozen=True)
class GroupParams:
    """Group-level parameters: the estimand of the whole study.

    emiss_mean[k, m]      state-dependent group-level means
    emiss_rand_var[k, m]  between-subject variances of the subject means
    emiss_resid_var[k, m] residual (within-subject) variances
    tpm_intercepts[i, j-2] group-level log-odds of moving i -> j versus the
                          baseline target state 1, for j in 2..m
    tpm_rand_var[i, j-2]  between-subject variances of those log-odds

    Random-effect and residual variances may be zero (degenerate generators
    are exercised by the simulator); they must be positive wherever a density
    is evaluated, which is enforced at that point of use.
    """

    emiss_mean: np.ndarray
    emiss_rand_var: np.ndarray
    emiss_resid_var: np.ndarray
    tpm_intercepts: np.ndarray
    tpm_rand_var: np.ndarray

    def __post_init__(self):
        mean = _as_matrix(self.emiss_mean, "emiss_mean")
        n_dep, m = mean.shape
        object.__setattr__(self, "emiss_mean", mean)
        object.__setattr__(
            self, "emiss_rand_var",
            _as_matrix(self.emiss_rand_var, "emiss_rand_var", (n_dep, m)))
        object.__setattr__(
            self, "emiss_resid_var",
            _as_matrix(self.emiss_resid_var, "emiss_resid_var", (n_dep, m)))
        object.__setattr__(
            self, "tpm_intercepts",
            _as_matrix(self.tpm_intercepts, "tpm_intercepts", (m, m - 1)))
        object.__setattr__(
            self, "tpm_rand_var",
            _as_matrix(self.tpm_rand_var, "tpm_rand_var", (m, m - 1)))
        for name in ("emiss_rand_var", "emiss_resid_var", "tpm_rand_var"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"{name} entries must be nonnegative")
        for a in (self.emiss_mean, self.emiss_rand_var, self.emiss_resid_var,
                  self.tpm_intercepts, self.tpm_rand_var):
            a.setflags(write=False)

    @property
    def n_dep(self) -> int:
        return self.emiss_mean.shape[0]

    @property
    def m(self) -> int:
        return self.emiss_mean.shape[1]

    def group_tpm(self) -> np.ndarray:
        """Transition matrix implied by the group-level intercepts."""
        return np.vstack([mnl_row(a) for a in self.tpm_intercepts])


@dataclass(frozen=True)
class SubjectParams:
    """One subject's realization of the group-level parameters."""

    subj_mean: np.ndarray   # [n_dep, m]
    tpm: np.ndarray         # [m, m]

    def __post_init__(self):
        mean = _as_matrix(self.subj_mean, "subj_mean")
        tpm = _as_matrix(self.tpm, "tpm", (mean.shape[1], mean.shape[1]))
        check = validate_tpm(tpm, row_sum_tol=1e-12)
        if not check.ok:
            raise ValueError(f"subject tpm invalid: {check.message}")
        object.__setattr__(self, "subj_mean", mean)
        object.__setattr__(self, "tpm", tpm)
        mean.setflags(write=False)
        tpm.setflags(write=False)


@dataclass(frozen=True)
class SubjectSeries:
    """Observed multivariate sequence for one subject.

    obs[t, k] holds occasion t of dependent variable k; true_states, when
    present, holds the generating latent states (1-based).
    """

    obs: np.ndarray
    true_states: np.ndarray | None = None

    def __post_init__(self):
        obs = _as_matrix(self.obs, "obs")
        if obs.shape[0] < 1:
            raise ValueError("need at least one occasion")
        object.__setattr__(self, "obs", obs)
        obs.setflags(write=False)
        if self.true_states is not None:
            st = np.asarray(self.true_states, dtype=np.int64)
            if st.shape != (obs.shape[0],):
                raise ValueError("true_states length must match obs")
            if st.min() < 1:
                raise ValueError("true_states must be 1-based state indices")
            st = st.copy()
            st.setflags(write=False)
            object.__setattr__(self, "true_states", st)

    @property
    def n_occasions(self) -> int:
        return self.obs.shape[0]


@dataclass(frozen=True)
class Dataset:
    """A collection of subject series sharing the same dependent variables."""

    subjects: tuple[SubjectSeries, ...]

    def __post_init__(self):
        subjects = tuple(self.subjects)
        if not subjects:
            raise ValueError("dataset has no subjects")
        n_dep = subjects[0].obs.shape[1]
        for s in subjects:
            if s.obs.shape[1] != n_dep:
                raise ValueError("all subjects must share n_dep")
        object.__setattr__(self, "subjects", subjects)

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    @property
    def n_dep(self) -> int:
        return self.subjects[0].obs.shape[1]

    def validate_states(self, m: int) -> None:
        """Check that every annotated state index lies in 1..m."""
        for i, s in enumerate(self.subjects):
            if s.true_states is not None and s.true_states.max() > m:
                raise ValueError(f"subject {i + 1} has state index > m={m}")

    def has_states(self) -> bool:
        return all(s.true_states is not None for s in self.subjects)


@dataclass(frozen=True)
class TpmValidation:
    """Outcome of a row-stochasticity check, with a human-readable message."""

    ok: bool
    row_sums: np.ndarray
    message: str = "ok"


def mnl_row(intercepts) -> np.ndarray:
    """Map multinomial-logit intercepts to one row of transition probabilities.

    The baseline target (state 1) has implicit intercept 0; entry j > 1 is
    exp(a_j) / (1 + sum_j exp(a_j)). Computed in log space, so any finite
    intercepts produce a valid probability row.
    """
    a = np.asarray(intercepts, dtype=float).ravel()
    if not np.all(np.isfinite(a)):
        raise ValueError("intercepts must be finite")
    z = np.concatenate(([0.0], a))
    z -= z.max()
    p = np.exp(z)
    return p / p.sum()


def intercepts_from_row(row) -> np.ndarray:
    """Invert :func:`mnl_row`: recover log-odds from a strictly positive row."""
    p = np.asarray(row, dtype=float).ravel()
    if not np.all(np.isfinite(p)):
        raise ValueError("row must be finite")
    if np.any(p <= 0):
        raise ValueError("row entries must be strictly positive to take log-odds")
    if abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise ValueError(f"row sums to {p.sum()!r}, not 1 within {ROW_SUM_TOL}")
    return np.log(p[1:] / p[0])


def validate_tpm(tpm, row_sum_tol: float = ROW_SUM_TOL) -> TpmValidation:
    """Diagnostic (non-raising) check that a matrix is row-stochastic."""
    a = np.asarray(tpm, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"tpm must be square, got shape {a.shape}")
    row_sums = a.sum(axis=1)
    problems = []
    if not np.all(np.isfinite(a)):
        problems.append("non-finite entries")
    else:
        if np.any((a < 0) | (a > 1)):
            problems.append("entries outside [0, 1]")
        bad = np.nonzero(np.abs(row_sums - 1.0) > row_sum_tol)[0]
        if bad.size:
            sums = ", ".join(f"row {i + 1} sums to {row_sums[i]:.6g}" for i in bad)
            problems.append(sums)
    if problems:
        return TpmValidation(False, row_sums, "; ".join(problems))
    return TpmValidation(True, row_sums)


def stationary_distribution(tpm) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix.

    Solves (I - tpm' + 1) pi = 1. Reducible or otherwise degenerate chains
    (singular system, or negative mass beyond `tol`) fall back to the uniform
    distribution with a warning.
    """
    g = np.asarray(tpm, dtype=float)
    m = g.shape[0]
    a = np.eye(m) - g.T + np.ones((m, m))
    try:
        pi = np.linalg.solve(a, np.ones(m))
    except np.linalg.LinAlgError:
        warnings.warn("singular chain; using uniform initial distribution")
        return np.full(m, 1.0 / m)
    if np.any(pi < -1e-9) or abs(pi.sum() - 1.0) > 1e-6:
        warnings.warn("degenerate chain; using uniform initial distribution")
        return np.full(m, 1.0 / m)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()
