"""Posterior summaries and convergence diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PosteriorSummary:
    """Point and interval summary of one parameter's stored draws.

    The point estimate convention is the posterior median; cci_low/cci_high
    are the 2.5% and 97.5% quantiles (central credible interval).
    """

    median: float
    mean: float
    sd: float
    cci_low: float
    cci_high: float


def _draws(chain, parameter):
    if parameter is None:
        return np.asarray(chain, dtype=float).ravel()
    return np.asarray(chain.parameter(parameter), dtype=float)


def summarize(chain, parameter: str | None = None) -> PosteriorSummary:
    """Summarize one parameter of a chain (or a raw draw vector).

    Quantiles use linear interpolation (numpy's default, type-7 style), fixed
    here so that tabulated outputs are stable.
    """
    x = _draws(chain, parameter)
    if x.size == 0:
        raise ValueError("no draws to summarize")
    lo, med, hi = np.quantile(x, [0.025, 0.5, 0.975], method="linear")
    sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return PosteriorSummary(median=float(med), mean=float(x.mean()), sd=sd,
                            cci_low=float(lo), cci_high=float(hi))


def gelman_rubin(chains, parameter: str | None = None) -> float:
    """Potential scale reduction across two or more equal-length chains.

    Classic two-or-more-chain estimate from the between- and within-chain
    variances: R-hat = sqrt(((n-1)/n * W + (1 + 1/M) * B/n) / W).
    """
    seqs = [_draws(c, parameter) for c in chains]
    if len(seqs) < 2:
        raise ValueError("need at least two chains")
    n = seqs[0].size
    if n < 10:
        raise ValueError("chains too short for a stable estimate")
    if any(s.size != n for s in seqs):
        raise ValueError("chains must have equal stored lengths")
    draws = np.vstack(seqs)
    m = draws.shape[0]
    chain_means = draws.mean(axis=1)
    b_over_n = chain_means.var(ddof=1)
    w = draws.var(axis=1, ddof=1).mean()
    if w == 0.0:
        return 1.0 if b_over_n == 0.0 else np.inf
    v_hat = (n - 1) / n * w + (1.0 + 1.0 / m) * b_over_n
    return float(np.sqrt(v_hat / w))


def split_gelman_rubin(chains, parameter: str | None = None) -> float:
    """R-hat after splitting every chain in half (guards against trends)."""
    seqs = []
    for c in chains:
        x = _draws(c, parameter)
        h = x.size // 2
        seqs += [x[:h], x[h:2 * h]]
    return gelman_rubin(seqs)


def autocorr(chain, parameter: str | None = None, max_lag: int = 20) -> np.ndarray:
    """Sample autocorrelation function, normalized so acf[0] == 1."""
    x = _draws(chain, parameter)
    n = x.size
    if max_lag >= n:
        raise ValueError("max_lag must be smaller than the stored length")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        out = np.zeros(max_lag + 1)
        out[0] = 1.0
        return out
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for lag in range(1, max_lag + 1):
        acf[lag] = float(xc[:-lag] @ xc[lag:]) / denom
    return acf
