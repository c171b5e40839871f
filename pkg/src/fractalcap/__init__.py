"""Capacity scaling of wireless networks carrying traffic over fractal social graphs."""
from .errors import (BudgetError, ConfigError, DomainError, EstimationError, FitError,
                     FractalCapError, UnsupportedRegimeError)
from .regression import loglog_fit
from .socialgraph import SocialGraph, build_graph, generate_graph, sample_degrees
from .wireless import Deployment, HopEstimate, Rule, deploy

__version__ = "0.1.0"

__all__ = [
    "BudgetError", "ConfigError", "DomainError", "EstimationError", "FitError",
    "FractalCapError", "UnsupportedRegimeError",
    "SocialGraph", "build_graph", "generate_graph", "sample_degrees",
    "Deployment", "HopEstimate", "Rule", "deploy",
    "loglog_fit",
]
