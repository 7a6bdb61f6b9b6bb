"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """An argument violates a documented precondition."""


class InvalidSampleError(ValueError):
    """A point configuration cannot be used (e.g. contains 0 or duplicates)."""


class PoleError(ArithmeticError):
    """Evaluation requested exactly at a pole of the target function."""


class WindowTooLargeError(ValueError):
    """Requested evaluation window exceeds the reliable Taylor radius."""


class SaddleFailureError(RuntimeError):
    """Newton iteration for the saddle did not converge.

    Carries the iteration trace as an (n, 3) array of
    (Re z, Im z, residual) rows.
    """

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace
