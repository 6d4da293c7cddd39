"""Bayesian estimation of DCC-GARCH(1,1) models with skewed multivariate errors."""
from bayesdcc.diagnostics import (
    PosteriorSummary,
    autocorrelation,
    density_estimate,
    effective_sample_size,
    posterior_paths,
    summarize,
)
from bayesdcc.distributions import SkewFamily, skew_log_density, skew_sample, symmetric_log_density
from bayesdcc.errors import InvalidInputError, NumericalDomainError
from bayesdcc.io import load_returns
from bayesdcc.mcmc import McmcChain, SamplerConfig, find_mode, fit, run_pilot, sample
from bayesdcc.model import (
    ParamVector,
    ReturnsMatrix,
    initial_state,
    log_likelihood,
    run_recursions,
    simulate_path,
)
from bayesdcc.priors import DccPosterior, PriorSpec, default_priors, log_posterior, log_prior

__version__ = "0.1.0"

__all__ = [
    "PosteriorSummary",
    "autocorrelation",
    "density_estimate",
    "effective_sample_size",
    "posterior_paths",
    "summarize",
    "SkewFamily",
    "skew_log_density",
    "skew_sample",
    "symmetric_log_density",
    "InvalidInputError",
    "NumericalDomainError",
    "McmcChain",
    "SamplerConfig",
    "find_mode",
    "fit",
    "run_pilot",
    "sample",
    "load_returns",
    "ParamVector",
    "ReturnsMatrix",
    "initial_state",
    "log_likelihood",
    "run_recursions",
    "simulate_path",
    "DccPosterior",
    "PriorSpec",
    "default_priors",
    "log_posterior",
    "log_prior",
]
