"""Numba kernels for the sequential recursions that dominate runtime.

All kernels are deterministic given their inputs; randomness enters only
through pre-drawn uniforms, which keeps stream handling in numpy-land.
States are 0-based inside kernels.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def forward_filter(log_dens, tpm, delta):
    """Scaled forward recursion.

    Returns (alphan, loglik): alphan[t] is the normalized filtering
    distribution p(state_t | obs_1..t) and loglik the marginal log-likelihood.
    Per-step renormalization plus a per-step max shift of the log densities
    keeps the recursion finite for arbitrarily long series.
    """
    n, m = log_dens.shape
    alphan = np.empty((n, m))
    pred = delta.copy()
    loglik = 0.0
    for t in range(n):
        cmax = log_dens[t, 0]
        for i in range(1, m):
            if log_dens[t, i] > cmax:
                cmax = log_dens[t, i]
        tot = 0.0
        for i in range(m):
            alphan[t, i] = pred[i] * np.exp(log_dens[t, i] - cmax)
            tot += alphan[t, i]
        for i in range(m):
            alphan[t, i] /= tot
        loglik += np.log(tot) + cmax
        if t < n - 1:
            for j in range(m):
                s = 0.0
                for i in range(m):
                    s += alphan[t, i] * tpm[i, j]
                pred[j] = s
    return alphan, loglik


@numba.njit(cache=True)
def backward_sample(alphan, tpm, uniforms):
    """Draw a state path from its joint posterior given the filtered alphan.

    uniforms must hold one U(0,1) draw per occasion; the draw at index t
    selects state_t.
    """
    n, m = alphan.shape
    states = np.empty(n, dtype=np.int64)
    states[n - 1] = _draw_index(alphan[n - 1], uniforms[n - 1])
    for t in range(n - 2, -1, -1):
        nxt = states[t + 1]
        tot = 0.0
        w = np.empty(m)
        for i in range(m):
            w[i] = alphan[t, i] * tpm[i, nxt]
            tot += w[i]
        target = uniforms[t] * tot
        acc = 0.0
        idx = m - 1
        for i in range(m):
            acc += w[i]
            if target <= acc:
                idx = i
                break
        states[t] = idx
    return states


@numba.njit(cache=True)
def _draw_index(weights, u):
    tot = 0.0
    for i in range(weights.shape[0]):
        tot += weights[i]
    target = u * tot
    acc = 0.0
    for i in range(weights.shape[0]):
        acc += weights[i]
        if target <= acc:
            return i
    return weights.shape[0] - 1


@numba.njit(cache=True)
def markov_walk(tpm, delta, uniforms):
    """Simulate a Markov chain: state_1 ~ delta, state_{t+1} ~ tpm[state_t]."""
    n = uniforms.shape[0]
    states = np.empty(n, dtype=np.int64)
    states[0] = _draw_index(delta, uniforms[0])
    for t in range(1, n):
        states[t] = _draw_index(tpm[states[t - 1]], uniforms[t])
    return states
