"""Likelihood evaluation and state decoding for fixed parameter values.

The parameters here are point values (one mean and one variance per variable
and state); the multilevel structure is the sampler's concern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import forward_filter
from .model import SubjectSeries, validate_tpm
from .simulate import InitialDistribution

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class EmissionPointParams:
    """State-dependent Gaussian means/variances used for density evaluation."""

    mean: np.ndarray   # [n_dep, m]
    var: np.ndarray    # [n_dep, m]

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        var = np.asarray(self.var, dtype=float)
        if mean.shape != var.shape or mean.ndim != 2:
            raise ValueError("mean and var must be matrices of equal shape")
        if np.any(var <= 0) or not np.all(np.isfinite(var)):
            raise ValueError("variances must be strictly positive and finite")
        if not np.all(np.isfinite(mean)):
            raise ValueError("means must be finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)


def emission_logdensity(obs_row, params: EmissionPointParams) -> np.ndarray:
    """Per-state log density of one multivariate observation.

    Entry i sums the univariate Gaussian log densities over variables
    (conditional independence given the state).
    """
    x = np.asarray(obs_row, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("observation must be finite")
    if x.shape[0] != params.mean.shape[0]:
        raise ValueError("observation length must equal n_dep")
    z2 = (x[:, None] - params.mean) ** 2 / params.var
    return -0.5 * np.sum(z2 + np.log(params.var) + LOG_2PI, axis=0)


def emission_logdensity_matrix(obs, params: EmissionPointParams) -> np.ndarray:
    """Log densities for a whole series: returns [n_occasions, m]."""
    x = np.asarray(obs, dtype=float)
    d = x[:, :, None] - params.mean[None, :, :]
    z2 = d * d / params.var[None, :, :]
    const = np.sum(np.log(params.var) + LOG_2PI, axis=0)
    return -0.5 * (z2.sum(axis=1) + const[None, :])


def _check_chain_inputs(tpm, delta: InitialDistribution):
    tpm = np.asarray(tpm, dtype=float)
    check = validate_tpm(tpm)
    if not check.ok:
        raise ValueError(f"invalid tpm: {check.message}")
    if delta.delta.shape[0] != tpm.shape[0]:
        raise ValueError("delta length must match tpm size")
    return tpm


def forward_loglik(series: SubjectSeries, tpm, delta: InitialDistribution,
                   params: EmissionPointParams) -> float:
    """Exact marginal log-likelihood of one series under fixed parameters."""
    tpm = _check_chain_inputs(tpm, delta)
    log_dens = emission_logdensity_matrix(series.obs, params)
    _, loglik = forward_filter(log_dens, tpm, delta.delta)
    return float(loglik)


def decode_states(series: SubjectSeries, tpm, delta: InitialDistribution,
                  params: EmissionPointParams) -> tuple[np.ndarray, np.ndarray]:
    """Joint most-probable path (Viterbi) and per-occasion local posteriors.

    Returns (path, posteriors): path is 1-based; posteriors[t] is the smoothed
    distribution p(state_t | all observations) and sums to one. Viterbi ties
    are broken toward the lower state index, so decoded paths are
    deterministic.
    """
    tpm = _check_chain_inputs(tpm, delta)
    log_dens = emission_logdensity_matrix(series.obs, params)
    n, m = log_dens.shape
    with np.errstate(divide="ignore"):
        log_tpm = np.log(tpm)
        log_delta = np.log(delta.delta)

    # Viterbi in log space; argmax takes the first (lowest-index) maximizer.
    score = log_delta + log_dens[0]
    back = np.zeros((n, m), dtype=np.int64)
    for t in range(1, n):
        cand = score[:, None] + log_tpm
        back[t] = np.argmax(cand, axis=0)
        score = cand[back[t], np.arange(m)] + log_dens[t]
    path = np.empty(n, dtype=np.int64)
    path[-1] = int(np.argmax(score))
    for t in range(n - 2, -1, -1):
        path[t] = back[t + 1][path[t + 1]]

    # Forward-backward smoothing with per-step scaling.
    shift = log_dens.max(axis=1)
    w = np.exp(log_dens - shift[:, None])            # scaled densities
    alpha = np.empty((n, m))
    c = np.empty(n)
    pred = delta.delta
    for t in range(n):
        a = pred * w[t]
        c[t] = a.sum()
        alpha[t] = a / c[t]
        pred = alpha[t] @ tpm
    beta = np.empty((n, m))
    beta[-1] = 1.0
    for t in range(n - 2, -1, -1):
        beta[t] = (tpm @ (w[t + 1] * beta[t + 1])) / c[t + 1]
    post = alpha * beta
    post /= post.sum(axis=1, keepdims=True)
    return path + 1, post
