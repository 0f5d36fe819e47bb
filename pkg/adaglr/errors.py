"""Exception hierarchy.

Every error raised by the library derives from :class:`AdaGlrError`. The
command-line front end maps each class to a process exit code through the
``exit_code`` attribute, and pipelines record the failing ``stage`` on the
error as it unwinds.
"""

from typing import Any, Optional


class AdaGlrError(Exception):
    """Base class for all library errors."""

    exit_code = 1

    def __init__(self, message: str, stage: Optional[str] = None) -> None:
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        message = super().__str__()
        if self.stage:
            return f"[{self.stage}] {message}"
        return message


class ConfigError(AdaGlrError):
    """Invalid configuration, CLI arguments or experiment grid."""

    exit_code = 2


class DataError(AdaGlrError):
    """Unreadable or malformed input data."""

    exit_code = 3


class NumericalError(AdaGlrError):
    """A numerical routine failed or a statistic is degenerate."""

    exit_code = 4


class InvalidArgumentError(NumericalError):
    """A numerical argument is outside the domain of the operation."""


class QuadratureError(NumericalError):
    """Numerical integration did not reach the requested tolerance."""


class SingularDesignError(NumericalError):
    """The least-squares design matrix is rank deficient."""


class ConvergenceError(NumericalError):
    """An iterative optimizer failed to converge.

    Attributes:
        best: Best iterate found before giving up (may be None)
    """

    def __init__(self, message: str, best: Any = None, stage: Optional[str] = None) -> None:
        super().__init__(message, stage=stage)
        self.best = best


class DegenerateBandwidthError(NumericalError):
    """Every kernel row fell below the denominator floor."""


class LocalFitError(NumericalError):
    """Too many local-linear fits were rank deficient."""


class DegenerateStatisticError(NumericalError):
    """A test statistic cannot be formed (zero residuals or zero variance)."""


class BootstrapUnstableError(NumericalError):
    """Too many bootstrap resamples failed."""


class ExperimentUnreliableError(AdaGlrError):
    """Too many Monte Carlo replications failed."""

    exit_code = 5
