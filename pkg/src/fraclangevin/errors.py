"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``ValidationError`` -> 1,
``NumericalError`` -> 2, ``StatisticalTestError`` -> 3.
"""


class FracLangevinError(Exception):
    """Base class for all package errors."""


class ValidationError(FracLangevinError, ValueError):
    """A parameter or configuration violates a documented precondition."""


class NumericalError(FracLangevinError, RuntimeError):
    """A numerical procedure failed to converge or to validate."""


class QuadratureError(NumericalError):
    """Two quadrature refinement levels disagree beyond tolerance."""

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class HypothesisError(NumericalError):
    """A structural hypothesis of the decay framework is infeasible."""


class IntegrabilityError(ValidationError):
    """An integrand is not integrable against the requested measure."""


class StatisticalTestError(FracLangevinError):
    """A statistical acceptance test rejected its null hypothesis."""
