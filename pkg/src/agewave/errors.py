"""Exception hierarchy.

`ValidationError` covers bad input data (the CLI maps it to exit code 2);
everything deriving from `NumericalCheckError` is a failed numerical
verification or a solver that did not converge (exit code 3).
"""


class AgewaveError(Exception):
    pass


class ValidationError(AgewaveError, ValueError):
    pass


class NormalizationError(ValidationError):
    pass


class DomainError(AgewaveError, ValueError):
    pass


class NumericalCheckError(AgewaveError):
    pass


class IntegrationError(NumericalCheckError):
    pass


class SpectralError(NumericalCheckError):
    pass


class SubcriticalModelError(NumericalCheckError):
    pass


class BracketError(NumericalCheckError):
    pass


class ParameterSelectionError(NumericalCheckError):
    pass


class NonConvergenceError(NumericalCheckError):
    pass


class OrderingError(NumericalCheckError):
    pass


class RegularityError(NumericalCheckError):
    pass


class StabilityError(NumericalCheckError):
    pass


class InvarianceError(NumericalCheckError):
    pass


class ModelInconsistencyError(NumericalCheckError):
    pass


class ComparisonError(NumericalCheckError):
    pass


class EstimationError(NumericalCheckError):
    pass


class CrossValidationError(NumericalCheckError):
    pass
