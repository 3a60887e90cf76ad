"""Exception and warning types shared by every module."""


class FracombError(Exception):
    """Base class for package errors."""


class InvalidInputError(FracombError, ValueError):
    """Input violates a documented precondition."""


class UnsupportedOrderError(InvalidInputError):
    """Fractional order outside the range an operator supports."""


class PrecisionLossError(FracombError, ArithmeticError):
    """Requested accuracy was not reached; ``estimate`` holds the achieved error."""

    def __init__(self, message, estimate=float("nan")):
        super().__init__(f"{message} (estimate {estimate:.3e})")
        self.estimate = estimate


class BoundaryLeakageError(FracombError):
    """Mass reached the edge of a truncated domain."""

    def __init__(self, message, leakage=float("nan")):
        super().__init__(f"{message} (leakage {leakage:.3e})")
        self.leakage = leakage


class PoleProximityError(FracombError, ZeroDivisionError):
    """Evaluation point sits on a pole of a closed form."""


class OutOfRegimeError(FracombError, ValueError):
    """Asymptotic formula requested outside its regime of validity."""


class SolverError(FracombError, RuntimeError):
    """Linear solve failed; ``residual`` holds the final residual."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class SingularSampleWarning(UserWarning):
    """A returned sample sits on an integrable singularity and is not finite."""


class LeakageWarning(UserWarning):
    """Boundary-band mass exceeded the monitor threshold."""


class RegimeWarning(UserWarning):
    """Asymptotic formula used near the edge of its regime."""
