"""Exception hierarchy. The CLI maps these classes onto exit codes."""


class GraphTabError(Exception):
    """Base class for all graphtab errors."""


class InputDataError(GraphTabError):
    """Malformed files, invalid arguments, violated preconditions (exit 1)."""


class LimitViolation(InputDataError):
    """Request exceeds the external backbone's task limits (exit 1)."""


class ConvergenceError(GraphTabError):
    """An iterative solver ran out of iterations (exit 2)."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NumericError(GraphTabError):
    """Non-finite values or numerically degenerate inputs (exit 2)."""


class BridgeError(GraphTabError):
    """Bridge unavailable, timed out, or replied malformed (exit 3)."""
