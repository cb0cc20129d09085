"""Exception and warning types raised by the reconstruction routines."""


class ReconstructionError(Exception):
    """Base class for all errors raised by netrecon."""


class InvalidMarginals(ReconstructionError, ValueError):
    """Row and column totals disagree, or contain negative entries."""


class DimensionMismatch(ReconstructionError, ValueError):
    pass


class DomainError(ReconstructionError, ValueError):
    """Argument lies outside the domain where the quantity is defined."""


class ZeroTotal(ReconstructionError, ValueError):
    pass


class TargetUnreachable(ReconstructionError, ValueError):
    """No finite calibration parameter attains the requested density."""


class NonConvergence(ReconstructionError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The partial result (if any) is attached as ``result`` and the final
    stationarity measure as ``residual``.
    """

    def __init__(self, message, result=None, residual=None):
        super().__init__(message)
        self.result = result
        self.residual = residual


class Cancelled(ReconstructionError):
    pass


class StructureInfeasible(ReconstructionError, RuntimeError):
    """Every drawn binary structure was rejected before the retry budget ran out."""


class ScalingDiverged(ReconstructionError, RuntimeError):
    pass


class NoFeasibleStart(ReconstructionError, ValueError):
    pass


class DegenerateLabels(ReconstructionError, ValueError):
    pass


class NoPositives(DegenerateLabels):
    pass


class DegenerateCovariateWarning(UserWarning):
    """The covariate is constant, so its coefficient cannot be identified."""
