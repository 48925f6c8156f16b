"""Exception types raised by the solver and the experiment driver."""


class ConfigurationError(ValueError):
    """Invalid grid, solver or experiment configuration."""


class GridMismatchError(ValueError):
    """Two grid functions do not live on the same grid."""


class ParameterError(ValueError):
    """Model parameters outside the domain of a closed-form formula."""


class SolverDivergenceError(RuntimeError):
    """Non-finite values appeared during the stage iteration."""

    def __init__(self, message, iteration=None, step=None):
        super().__init__(message)
        self.iteration = iteration
        self.step = step


class DegenerateProjectionError(ArithmeticError):
    """The projection direction is (numerically) orthogonal to the energy gradient."""
