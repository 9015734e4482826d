"""Exception types raised across the package."""


class NIHigsError(Exception):
    """Base class for all package errors."""


class DimensionError(NIHigsError, ValueError):
    """Matrix or vector shapes are inconsistent."""


class NonFiniteError(NIHigsError, ValueError):
    """A NaN or infinite value was supplied or produced."""


class SingularMatrixError(NIHigsError, ArithmeticError):
    """A matrix that must be inverted is singular or numerically close to it.

    Attributes
    ----------
    smallest_singular_value : float
        Smallest singular value of the offending matrix.
    rcond : float
        Ratio of smallest to largest singular value.
    """

    def __init__(self, message, smallest_singular_value=float("nan"), rcond=float("nan")):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value
        self.rcond = rcond


class NotMinimalError(NIHigsError, ValueError):
    """The realization is not both controllable and observable."""


class ConfigError(NIHigsError, ValueError):
    """A configuration or data file is malformed.

    ``field`` carries the dotted path of the offending entry when known.
    """

    def __init__(self, message, field=None):
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
