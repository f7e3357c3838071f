"""Exception hierarchy shared by every stage of the package."""


class SumSpecError(Exception):
    """Base class for all errors raised by sumspec."""


class IndexOutOfRange(SumSpecError, IndexError):
    pass


class SelfLoop(SumSpecError, ValueError):
    pass


class SizeMismatch(SumSpecError, ValueError):
    pass


class AllRowsDropped(SumSpecError):
    """Degree truncation removed every vertex."""


class InvalidDistribution(SumSpecError, ValueError):
    pass


class IdentifiabilityViolation(SumSpecError, ValueError):
    pass


class EmptyCommunity(SumSpecError, ValueError):
    pass


class KTooLarge(SumSpecError, ValueError):
    pass


class ConvergenceFailure(SumSpecError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DegenerateInput(SumSpecError, ValueError):
    pass


class NoNonzeroRows(SumSpecError):
    """Every row of the eigenvector embedding is numerically zero."""


class ConfigError(SumSpecError, ValueError):
    pass
