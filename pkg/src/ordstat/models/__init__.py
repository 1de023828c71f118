from .common import McmcConfig, PosteriorSamples, posterior_predictive, predictive_logpmf
from .iid_nb import IidNbModel, fit_iid_nb
from .factorization import FactorizationModel, fit_factorization
from .flights import FlightModel, fit_flights

__all__ = [
    "McmcConfig",
    "PosteriorSamples",
    "posterior_predictive",
    "predictive_logpmf",
    "IidNbModel",
    "fit_iid_nb",
    "FactorizationModel",
    "fit_factorization",
    "FlightModel",
    "fit_flights",
]
