"""Custom exceptions for sqc-smoother.

This module provides a hierarchy of exceptions for better error handling
and clearer error messages throughout the application.
"""


class SmootherError(Exception):
    """Base exception for all sqc-smoother errors.

    All custom exceptions in sqc-smoother inherit from this class,
    making it easy to catch all package-specific errors.
    """

    pass


class InvalidArgumentError(SmootherError, ValueError):
    """Raised when an operation receives malformed input.

    Examples:
        - Vector or matrix dimension mismatch
        - Non-positive discretization step
        - Inconsistent sequence lengths
        - Weight matrix that is not symmetric positive-definite
    """

    pass


class ScenarioError(SmootherError):
    """Raised when a scenario file fails validation.

    Examples:
        - Unknown or missing field
        - smooth_at_k outside [0, horizon_t]
        - Non-symmetric N matrix
    """

    pass


class UnsupportedInstanceError(ScenarioError):
    """Raised when the dynamic-programming oracle cannot handle an instance.

    Examples:
        - Non-affine dynamics or output maps
        - Value function unbounded below (uncertainty output dominates)
    """

    pass


class NumericalError(SmootherError):
    """Raised when a computation fails at runtime.

    Examples:
        - Non-finite values in a filter recursion
        - Admissible-noise generation exhausted its attempts
    """

    pass


class NoiseGenerationError(NumericalError):
    """Raised when no admissible noise realization could be produced."""

    pass


class ExportError(SmootherError):
    """Raised when reading or writing result files fails.

    Examples:
        - Output directory not writable
        - Scenario file missing or not UTF-8
    """

    pass
