"""Exception hierarchy shared by all modules."""


class LSICertError(Exception):
    """Base class for every error raised by lsicert."""


class DimensionMismatch(LSICertError, ValueError):
    pass


class SameIndex(LSICertError, ValueError):
    pass


class NotPositiveDefinite(LSICertError, ValueError):
    pass


class NotNormalizable(LSICertError, ValueError):
    pass


class NoDecomposition(LSICertError, ValueError):
    """No convex-plus-bounded split of the conditionals is available."""


class UnsupportedVariant(LSICertError, ValueError):
    pass


class SupportTooLarge(LSICertError, ValueError):
    pass


class CapacityExceeded(LSICertError, ValueError):
    pass


class NonCertified(LSICertError, ValueError):
    """An operation needs a passing certificate and got a failing one."""


class IterationCap(LSICertError, RuntimeError):
    def __init__(self, message, achieved=None, iterations=None):
        super().__init__(message)
        self.achieved = achieved
        self.iterations = iterations


class SpecFileError(LSICertError, ValueError):
    pass
