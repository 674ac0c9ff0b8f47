"""Exception hierarchy.

Everything raised on purpose by the package derives from ``CodedSplineError`` so
callers (and the CLI) can catch one type.
"""


class CodedSplineError(Exception):
    """Base class for all package errors."""


class InvalidAbscissae(CodedSplineError, ValueError):
    pass


class TooFewPoints(CodedSplineError, ValueError):
    pass


class NumericalFailure(CodedSplineError, ArithmeticError):
    pass


class OutOfDomain(CodedSplineError, ValueError):
    pass


class InvalidLambda(CodedSplineError, ValueError):
    pass


class Unsupported(CodedSplineError, ValueError):
    pass


class BandwidthTooNarrow(CodedSplineError, ValueError):
    pass


class HypothesisNotMet(CodedSplineError):
    """An inequality's precondition does not hold; reported, not counted as a failure."""


class InvalidExponent(CodedSplineError, ValueError):
    pass


class ResponseOutOfRange(CodedSplineError, ValueError):
    pass


class BudgetExceeded(CodedSplineError, ValueError):
    pass


class IllConditioned(CodedSplineError, ArithmeticError):
    pass


class NotFound(CodedSplineError, KeyError):
    pass


class ConfigError(CodedSplineError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class SlopeUndefined(CodedSplineError, ValueError):
    pass
