"""Exception hierarchy shared by all modules."""


class BBWError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BBWError, ValueError):
    """A point lies outside [0, 1] or a tabulated function is queried off-grid."""


class SizeError(BBWError, ValueError):
    """A grid or vector has the wrong number of entries."""


class ShapeError(SizeError):
    """Coefficient vectors do not match the transform plan."""


class ConditioningError(BBWError, ArithmeticError):
    """A linear system is singular or too ill conditioned to trust.

    ``interval`` (or ``index``) names the offending location when known.
    """

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class InconsistencyError(BBWError, ArithmeticError):
    """An overdetermined system that should be exact has a large residual."""


class StructuralError(BBWError):
    """A block that must vanish by construction holds a nonzero entry."""


class FactoringError(BBWError, ArithmeticError):
    """Band elimination hit a zero pivot."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DesignError(BBWError, ArithmeticError):
    """The moment system of the final update is singular for some wavelet."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class ConfigError(BBWError, ValueError):
    """Invalid experiment configuration."""
