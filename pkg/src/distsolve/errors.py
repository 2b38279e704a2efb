"""Exception hierarchy.

Validation problems (bad input, violated structural assumptions) derive from
:class:`ValidationError`; failures of a numerical stage derive from
:class:`NumericalError`. The CLI maps the two families to distinct exit codes.
"""


class DistSolveError(Exception):
    """Base class for all package errors."""


class ValidationError(DistSolveError, ValueError):
    pass


class NumericalError(DistSolveError, ArithmeticError):
    pass


class ExpressionParseError(ValidationError):
    """Raised with the 0-based character offset of the offending token."""

    def __init__(self, message, position, text=""):
        self.position = position
        self.text = text
        super().__init__(f"{message} (at position {position})")


class OddOrder(ValidationError):
    pass


class DegenerateLeadingCoefficient(ValidationError):
    pass


class NonConstantCoefficients(ValidationError):
    pass


class DichotomyViolation(ValidationError):
    def __init__(self, message, roots=()):
        self.roots = tuple(roots)
        super().__init__(message)


class VariableCoefficientQUnsupported(ValidationError):
    pass


class OrderOutOfRange(ValidationError):
    pass


class OnDiagonal(ValidationError):
    pass


class DegenerateGreen(ValidationError):
    pass


class SymbolZeroOnAxis(ValidationError):
    pass


class GapTooSmall(ValidationError):
    pass


class IntegrationFailure(NumericalError):
    pass


class SingularWronskian(NumericalError):
    pass


class RankDeficientMatching(NumericalError):
    pass


class SingularMatchingSystem(NumericalError):
    def __init__(self, message, condition=float("inf")):
        self.condition = condition
        super().__init__(message)


class QuadratureFailure(NumericalError):
    pass


class IllConditioned(NumericalError):
    def __init__(self, message, condition=float("inf")):
        self.condition = condition
        super().__init__(message)
