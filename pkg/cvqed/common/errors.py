from cvqed.common.constants import (
    EXIT_BUDGET,
    EXIT_CONFIG,
    EXIT_UNEXPECTED,
    EXIT_VALIDATION,
)


class CvqedError(Exception):
    """Base class for all errors raised by the simulator."""

    exit_code = EXIT_VALIDATION


class ConfigError(CvqedError, ValueError):
    """Raised for malformed or inconsistent configuration."""

    exit_code = EXIT_CONFIG


class InvalidWindow(ConfigError):
    """Raised when a coupling schedule window is ill-ordered."""


class CutoffTooSmall(CvqedError, ValueError):
    exit_code = EXIT_CONFIG


class DimensionMismatch(CvqedError, ValueError):
    pass


class NonSymplectic(CvqedError, ValueError):
    pass


class ZeroNorm(CvqedError, ValueError):
    pass


class PoleProximity(CvqedError, ValueError):
    pass


class ConstraintViolation(CvqedError, RuntimeError):
    """Raised in strict mode when the Gauss constraint trace exceeds its bound."""


class ExpansionUnstable(CvqedError, RuntimeError):
    """Raised when finite-difference coefficients are dominated by noise."""

    exit_code = EXIT_BUDGET


class BudgetExceeded(CvqedError, RuntimeError):
    exit_code = EXIT_BUDGET


class OracleTooLarge(BudgetExceeded):
    pass


class QuadratureNotConverged(BudgetExceeded):
    pass


def exit_code_for(error: Exception) -> int:
    """Maps an exception to the command-line exit code."""
    if isinstance(error, CvqedError):
        return error.exit_code
    return EXIT_UNEXPECTED
