"""Exception types raised across the package."""


class MWTError(Exception):
    """Base class for all package errors."""


class OrderUnsupportedError(MWTError, ValueError):
    pass


class DomainError(MWTError, ValueError):
    pass


class DegenerateBasisError(MWTError, ArithmeticError):
    pass


class FilterValidationError(MWTError, ArithmeticError):
    pass


class ShapeError(MWTError, ValueError):
    pass


class ScaleError(MWTError, ValueError):
    pass


class KernelEvaluationError(MWTError, ValueError):
    pass


class SpecError(MWTError, ValueError):
    """Invalid random-field specification."""


class CovarianceError(MWTError, ArithmeticError):
    pass


class SolverDivergenceError(MWTError, ArithmeticError):
    pass


class ResonanceError(MWTError, ArithmeticError):
    """The boundary-value operator is singular at the requested frequency."""


class EllipticityError(MWTError, ValueError):
    pass


class SolverError(MWTError, ArithmeticError):
    pass


class DegenerateTargetError(MWTError, ValueError):
    pass


class DivergenceError(MWTError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class FormatError(MWTError, ValueError):
    """Malformed dataset or checkpoint file."""


class IncompatibleCheckpointError(MWTError, ValueError):
    pass


class ConfigError(MWTError, ValueError):
    pass
