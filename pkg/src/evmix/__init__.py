"""Semiparametric estimation of the distribution of the sample maximum.

The distribution of the maximum of the next ``m`` observations is estimated
by a GEV block-maxima fit, by a kernel estimate raised to the power ``m``,
and by two mixtures of the two: one weighted by pseudolikelihood and one
whose bandwidth, chosen by leave-one-out cross-validation, also sets the
mixing weight.
"""
from .dist_zoo import DistributionSpec, parse_spec, sample
from .estimators import EstimatorKnobs, FittedDsm, fit_dsm, forecast
from .exceptions import ConfigError, DomainError, EstimationError, EvmixError, InputError
from .gev_fit import GevParams, fit_dsm_gev
from .kernel_est import KernelId, plugin_bandwidth
from .metrics import mise
from .semiparam import fit_h_cv, fit_p

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DistributionSpec", "DomainError", "EstimationError", "EstimatorKnobs",
    "EvmixError", "FittedDsm", "GevParams", "InputError", "KernelId", "fit_dsm", "fit_dsm_gev",
    "fit_h_cv", "fit_p", "forecast", "mise", "parse_spec", "plugin_bandwidth", "sample",
]
