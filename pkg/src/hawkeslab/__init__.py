"""Toolkit for power-law self-exciting point processes.

Simulation (Ogata thinning), maximum-likelihood fitting with an O(N)
likelihood, non-parametric kernel recovery from the event-rate
autocovariance, residual goodness-of-fit and detrended fluctuation
analysis, plus scripted studies tying them together.
"""

from .core import (
    ApproxPowerLaw,
    EventSeries,
    ExponentialKernel,
    HawkesParams,
    IdealPowerLaw,
    IntradayProfile,
    KernelSpec,
    SplicedPowerLaw,
    branching_ratio,
    kernel_cumulative,
    kernel_eval,
    mean_intensity,
    theory_relations,
)
from .simulate import SimulationConfig, quantize_and_randomize, simulate, simulate_detrended
from .mle import FitResult, expected_excess_mu, fit_exponential, fit_powerlaw, log_likelihood

__version__ = "0.1.0"

__all__ = [
    "ApproxPowerLaw",
    "EventSeries",
    "ExponentialKernel",
    "FitResult",
    "HawkesParams",
    "IdealPowerLaw",
    "IntradayProfile",
    "KernelSpec",
    "SimulationConfig",
    "SplicedPowerLaw",
    "branching_ratio",
    "expected_excess_mu",
    "fit_exponential",
    "fit_powerlaw",
    "kernel_cumulative",
    "kernel_eval",
    "log_likelihood",
    "mean_intensity",
    "quantize_and_randomize",
    "simulate",
    "simulate_detrended",
    "theory_relations",
    "__version__",
]
