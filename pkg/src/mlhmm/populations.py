"""Population parameter sets used by the simulation study.

Two presets are shipped:

* ``sleep`` — three sleep states (Awake / NREM / REM) observed through three
  spectral EEG/EOG summary variables, with heavily overlapping component
  distributions and very persistent states.
* ``baseline`` — three well-separated synthetic states with moderate
  self-transition probabilities.

Mean matrices are laid out as [n_dep, m]; TPMs as [m, m] with rows summing
to one.
"""

from __future__ import annotations

import numpy as np

from .model import GroupParams, intercepts_from_row

RESIDUAL_VARIANCE = 0.1

SLEEP_STATE_LABELS = ("Awake", "NREM", "REM")
SLEEP_DEP_LABELS = ("EEG_mean_beta", "EOG_median_theta", "EOG_min_beta")

SLEEP_MEANS = np.array([
    [-0.360, -0.600, 0.700],
    [1.010, -1.310, -0.240],
    [0.750, -1.310, 0.005],
])

SLEEP_TPM = np.array([
    [0.984, 0.003, 0.013],
    [0.007, 0.959, 0.034],
    [0.012, 0.021, 0.967],
])

BASELINE_STATE_LABELS = ("State1", "State2", "State3")
BASELINE_DEP_LABELS = ("dep_1", "dep_2", "dep_3")

BASELINE_MEANS = np.array([
    [-3.900, -1.000, 2.400],
    [3.050, -3.400, -0.500],
    [0.400, 3.500, -2.800],
])

BASELINE_TPM = np.array([
    [0.800, 0.100, 0.100],
    [0.150, 0.700, 0.150],
    [0.180, 0.640, 0.180],
])

MEAN_PRESETS = {"sleep": SLEEP_MEANS, "baseline": BASELINE_MEANS}
TPM_PRESETS = {"sleep": SLEEP_TPM, "baseline": BASELINE_TPM}


def make_group_params(emiss_mean, tpm, zeta: float, q_var: float,
                      resid_var: float = RESIDUAL_VARIANCE) -> GroupParams:
    """Build group-level parameters from a mean matrix and a probability TPM.

    ``zeta`` is used as the between-subject variance of every subject mean and
    ``q_var`` as the between-subject variance of every TPM intercept; the TPM
    is converted to group-level log-odds intercepts against baseline state 1.
    """
    emiss_mean = np.asarray(emiss_mean, dtype=float)
    tpm = np.asarray(tpm, dtype=float)
    if zeta < 0 or q_var < 0 or resid_var < 0:
        raise ValueError("variances must be nonnegative")
    m = tpm.shape[0]
    intercepts = np.vstack([intercepts_from_row(tpm[i]) for i in range(m)])
    return GroupParams(
        emiss_mean=emiss_mean,
        emiss_rand_var=np.full(emiss_mean.shape, float(zeta)),
        emiss_resid_var=np.full(emiss_mean.shape, float(resid_var)),
        tpm_intercepts=intercepts,
        tpm_rand_var=np.full((m, m - 1), float(q_var)),
    )


def preset_group_params(means: str, tpm: str, zeta: float, q_var: float,
                        resid_var: float = RESIDUAL_VARIANCE) -> GroupParams:
    """Group parameters from named presets ('sleep' or 'baseline')."""
    try:
        mean_mat = MEAN_PRESETS[means]
        tpm_mat = TPM_PRESETS[tpm]
    except KeyError as e:
        raise ValueError(f"unknown preset {e.args[0]!r}; "
                         f"choose from {sorted(MEAN_PRESETS)}") from None
    return make_group_params(mean_mat, tpm_mat, zeta, q_var, resid_var)
