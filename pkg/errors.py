"""
FTN Toeplitz Toolkit — Error Types
Every failure the toolkit reports maps to one of these classes; the CLI turns
them into distinct exit codes.
"""

from typing import Optional

# Process exit codes reported by main.py
EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_ILL_CONDITIONED = 3
EXIT_NUMERIC_FAILURE = 4


class FTNError(Exception):
    """Base class for toolkit errors."""
    exit_code = 1


class InvalidArgument(FTNError, ValueError):
    """An operation was called outside its domain."""
    exit_code = EXIT_INVALID_CONFIG


class InvalidConfig(InvalidArgument):
    """An experiment config key is unknown, unparsable or out of range."""


class IllConditionedError(FTNError):
    """A Gramian or symbol is too close to singular for the requested path."""
    exit_code = EXIT_ILL_CONDITIONED

    def __init__(self, message: str, min_eigenvalue: float,
                 rho: Optional[float] = None, beta: Optional[float] = None):
        self.min_eigenvalue = min_eigenvalue
        self.rho = rho
        self.beta = beta
        if rho is not None and beta is not None:
            message = (f"{message} [(1+beta)*rho = {(1 + beta) * rho:.4f}; "
                       f"values below 1 leave the symbol with a zero set, "
                       f"use (1+beta)*rho >= 1]")
        super().__init__(message)


class NumericFailure(FTNError):
    """A numerical routine did not reach its tolerance."""
    exit_code = EXIT_NUMERIC_FAILURE

    def __init__(self, message: str, error_estimate: float = float("nan")):
        self.error_estimate = error_estimate
        super().__init__(f"{message} (error estimate {error_estimate:.3e})")
