"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the region where an operation is defined."""


class HypothesisError(ValueError):
    """Input data violate the curvature, convexity or growth hypotheses of a check."""


class IntegratorError(RuntimeError):
    """The adaptive integrator could not advance (step-size underflow, non-finite state)."""


class FormatError(ValueError):
    """Malformed varifold or report file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
