"""Exception hierarchy shared across the package."""


class AbigxError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(AbigxError, ValueError):
    """An array has the wrong shape or dimensionality."""


class SymmetryError(AbigxError, ValueError):
    """A matrix that must be symmetric is not."""


class ParameterError(AbigxError, ValueError):
    """An argument is outside its documented domain."""


class ConvergenceError(AbigxError, RuntimeError):
    """An iterative routine exhausted its budget without converging."""


class TrainingDivergedError(ConvergenceError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"training loss became non-finite at epoch {epoch}")


class NotCalibratedError(AbigxError, RuntimeError):
    """A fault index was used before its control limit was calibrated."""


class SingularDirectionError(AbigxError, ValueError):
    """A reconstruction direction lies (numerically) inside the principal subspace."""

    def __init__(self, variable, message=None):
        self.variable = variable
        super().__init__(
            message or f"variable {variable} has no residual-subspace component"
        )


class EvaluationError(AbigxError, RuntimeError):
    """A model or objective evaluation returned a non-finite value."""


class IncompatibleMethodError(AbigxError, ValueError):
    """An explanation method was applied to a model kind it does not support."""
