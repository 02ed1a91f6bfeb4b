"""Exception hierarchy for the package."""


class BSMGError(Exception):
    """Base class of every error raised by :mod:`bsmg`."""


class NoSingularity(BSMGError):
    pass


class MultipleSingularities(BSMGError):
    pass


class NotAZero(BSMGError):
    pass


class SingularDiagonal(BSMGError):
    pass


class ShapeMismatch(BSMGError):
    pass


class UnknownSymbol(BSMGError):
    pass


class DimensionMismatch(BSMGError, ValueError):
    pass


class OddSize(BSMGError, ValueError):
    pass


class TooLarge(BSMGError):
    pass


class SingularNormalization(BSMGError):
    pass


class SingularCoarse(BSMGError):
    pass


class BreakdownNonSPD(BSMGError):
    pass


class MaxIterationsExceeded(BSMGError):
    """Raised when an iterative solver hits its iteration cap.

    The partial :class:`~bsmg.multigrid.SolveReport` is attached as ``report``
    and the last iterate as ``x`` so callers can still log the run.
    """

    def __init__(self, message, report=None, x=None):
        super().__init__(message)
        self.report = report
        self.x = x


class ConfigError(BSMGError, ValueError):
    pass
