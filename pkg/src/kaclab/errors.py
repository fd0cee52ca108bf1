"""Exception hierarchy.  Every failure mode in the package raises one of these."""


class KacLabError(Exception):
    """Base class."""


class DomainError(KacLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedOrderError(DomainError):
    """Convolution order too small for the requested density."""


class ConfigError(KacLabError, ValueError):
    """Malformed or unknown configuration."""


class ConvergenceError(KacLabError, RuntimeError):
    """A quadrature or search did not reach its tolerance."""


class RefinementError(ConvergenceError):
    """Grid refinement kept changing the result beyond tolerance."""


class IndeterminateSignError(KacLabError, ArithmeticError):
    """A value is smaller than its own error estimate."""


class InconsistencyError(KacLabError, RuntimeError):
    """A measured constant contradicts a property that must hold."""


class UnreliableEstimateError(KacLabError, RuntimeError):
    """Importance sampling produced too small an effective sample size."""


class InsufficientDataError(KacLabError, ValueError):
    """Too few points for a fit."""


class UndefinedRatioError(KacLabError, ArithmeticError):
    """Entropy production ratio requested at (numerical) equilibrium."""


class CertificateUnavailable(KacLabError, ArithmeticError):
    """A bound cannot be evaluated for the supplied measured inputs."""
