"""Bayesian multilevel hidden Markov models for multivariate Gaussian series.

Subpackages cover the model types and logit transforms (:mod:`mlhmm.model`),
data generation (:mod:`mlhmm.simulate`), likelihood and decoding
(:mod:`mlhmm.inference`), the MCMC sampler (:mod:`mlhmm.sampler`), posterior
summaries and convergence checks (:mod:`mlhmm.diagnostics`), posterior
predictive checks (:mod:`mlhmm.ppc`), and the Monte Carlo study harness
(:mod:`mlhmm.study`). The ``mlhmm`` command line fronts all of them.
"""

from .model import (Dataset, GroupParams, ModelSpec, SubjectParams,
                    SubjectSeries, intercepts_from_row, mnl_row,
                    stationary_distribution, validate_tpm)
from .simulate import InitialDistribution, ScenarioSpec, simulate_dataset
from .sampler import Chain, Hyperpriors, McmcConfig, StartValues, run_mcmc

__version__ = "0.1.0"

__all__ = [
    "Chain", "Dataset", "GroupParams", "Hyperpriors", "InitialDistribution",
    "McmcConfig", "ModelSpec", "ScenarioSpec", "StartValues", "SubjectParams",
    "SubjectSeries", "intercepts_from_row", "mnl_row", "run_mcmc",
    "simulate_dataset", "stationary_distribution", "validate_tpm",
    "__version__",
]
