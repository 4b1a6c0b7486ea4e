"""Exception hierarchy shared by all modules."""


class DiracSpecError(Exception):
    """Base class for every error raised by the package."""


class DimensionMismatch(DiracSpecError, ValueError):
    pass


class TooFewSamples(DiracSpecError, ValueError):
    pass


class GridMismatch(DiracSpecError, ValueError):
    pass


class NotPositiveDefinite(DiracSpecError, ArithmeticError):
    """A Cholesky pivot was not positive.

    For an assembled structured operator this is the discrete signature of a
    measure whose operator has a nontrivial kernel.
    """

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class SingularDenominator(DiracSpecError, ArithmeticError):
    pass


class SingularBlock(DiracSpecError, ArithmeticError):
    pass


class NotHerglotz(DiracSpecError, ValueError):
    pass


class CharacterizationFailure(DiracSpecError):
    """Raised when an inverse problem is attempted on a rejected measure."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParseError(DiracSpecError, ValueError):
    pass
