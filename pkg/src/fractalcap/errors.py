"""Exception hierarchy shared by all fractalcap modules."""


class FractalCapError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FractalCapError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class FitError(FractalCapError):
    """A regression could not be performed (degenerate or too few points)."""


class BudgetError(FractalCapError):
    """An exact search was requested on an instance that is too large."""


class UnsupportedRegimeError(FractalCapError):
    """The requested parameter regime has no closed form."""


class EstimationError(FractalCapError):
    """A Monte Carlo estimate could not be formed (no eligible samples)."""


class ConfigError(FractalCapError, ValueError):
    """Invalid experiment or deployment configuration."""
