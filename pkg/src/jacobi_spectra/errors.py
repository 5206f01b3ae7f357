"""Exception hierarchy shared by all modules."""


class SpectraError(Exception):
    """Base class for every error raised by the package."""


class ModelError(SpectraError, ValueError):
    """Invalid coefficient model or a query the model cannot answer."""


class NumericFailure(SpectraError, ArithmeticError):
    """A computation produced a non-finite or inconsistent intermediate.

    ``index`` names the recurrence index (or eigenvalue index) at which the
    failure was detected, when there is one.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InconsistencyError(NumericFailure):
    """A quantity that must be positive (e.g. a Turan determinant) is not."""


class PoleError(NumericFailure):
    """Evaluation hit an exact pole of a rational approximant."""


class ImpossibleStateError(NumericFailure):
    """A state that exact arithmetic rules out was observed."""


class NonConvergenceError(NumericFailure):
    """An iterative procedure hit its iteration or depth cap."""


class CertificationError(SpectraError):
    """A hypothesis gate refused to run a computation."""

    def __init__(self, message, check=None):
        super().__init__(message)
        self.check = check


class ConfigError(SpectraError, ValueError):
    """Run configuration is malformed; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
