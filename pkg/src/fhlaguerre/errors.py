"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI maps it to.
"""


class FHError(Exception):
    exit_code = 1


class DomainError(FHError, ValueError):
    """Input outside the mathematical domain of an operation."""

    exit_code = 2


class ToleranceUnmet(FHError):
    """Quadrature could not reach the requested tolerance within its budget.

    ``best`` holds the best available estimate and ``error`` its error estimate.
    """

    exit_code = 3

    def __init__(self, message, best=None, error=None):
        super().__init__(message)
        self.best = best
        self.error = error


class PrecisionExhausted(FHError):
    """Working precision too low for the requested computation."""

    exit_code = 4


class DegenerateOrthogonality(FHError):
    """A monic orthogonal polynomial of some degree does not exist (zero pivot)."""

    exit_code = 5

    def __init__(self, degree, message=None):
        super().__init__(message or f"degenerate orthogonality at degree {degree}")
        self.degree = degree


class ConvergenceError(FHError):
    """Newton refinement of quadrature nodes failed to converge."""

    exit_code = 4
