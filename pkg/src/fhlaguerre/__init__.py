"""High-precision orthogonal-polynomial laboratory for a Laguerre weight with a
root-type and jump-type singularity near the soft edge."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    DegenerateOrthogonality,
    DomainError,
    FHError,
    PrecisionExhausted,
    ToleranceUnmet,
)
from .precision import LogScaled, Precision  # noqa: E402

__all__ = [
    "ConvergenceError",
    "DegenerateOrthogonality",
    "DomainError",
    "FHError",
    "LogScaled",
    "Precision",
    "PrecisionExhausted",
    "ToleranceUnmet",
    "__version__",
]
