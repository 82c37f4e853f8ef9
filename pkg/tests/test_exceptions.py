"""Tests for custom exception hierarchy."""

import pytest

from src.sqc_smoother.exceptions import (
    ExportError,
    InvalidArgumentError,
    NoiseGenerationError,
    NumericalError,
    ScenarioError,
    SmootherError,
    UnsupportedInstanceError,
)
from src.sqc_smoother.main import _exit_code

pytestmark = pytest.mark.unit  # All tests in this module are unit tests


class TestExceptionHierarchy:
    """Test that exceptions follow proper inheritance."""

    def test_smoother_error_is_base(self):
        """Test SmootherError is the base exception."""
        error = SmootherError("test error")
        assert isinstance(error, Exception)
        assert str(error) == "test error"

    def test_invalid_argument_error_is_value_error(self):
        """Test InvalidArgumentError can be caught as ValueError."""
        error = InvalidArgumentError("bad shape")
        assert isinstance(error, SmootherError)
        assert isinstance(error, ValueError)

    def test_unsupported_instance_is_scenario_error(self):
        """Test UnsupportedInstanceError inherits from ScenarioError."""
        error = UnsupportedInstanceError("nonlinear model")
        assert isinstance(error, ScenarioError)
        assert isinstance(error, SmootherError)

    def test_noise_generation_is_numerical_error(self):
        """Test NoiseGenerationError inherits from NumericalError."""
        error = NoiseGenerationError("no admissible draw")
        assert isinstance(error, NumericalError)

    def test_export_error_inherits_from_smoother_error(self):
        """Test ExportError inherits from SmootherError."""
        assert isinstance(ExportError("disk full"), SmootherError)

    def test_catch_all_smoother_errors(self):
        """Test that all custom errors can be caught with SmootherError."""
        errors = [
            InvalidArgumentError("test"),
            ScenarioError("test"),
            UnsupportedInstanceError("test"),
            NumericalError("test"),
            NoiseGenerationError("test"),
            ExportError("test"),
        ]
        for error in errors:
            with pytest.raises(SmootherError):
                raise error


class TestExitCodes:
    """Test the mapping from errors to CLI exit codes."""

    @pytest.mark.parametrize(
        "error,code",
        [
            (ScenarioError("x"), 2),
            (InvalidArgumentError("x"), 2),
            (UnsupportedInstanceError("x"), 2),
            (NumericalError("x"), 3),
            (NoiseGenerationError("x"), 3),
            (ExportError("x"), 4),
            (SmootherError("x"), 1),
        ],
        ids=["scenario", "argument", "unsupported", "numerical", "noise", "export", "base"],
    )
    def test_exit_code(self, error, code):
        """Test each error class maps to its documented exit code."""
        assert _exit_code(error) == code
