"""Tests for utility functions.

This module uses pytest.mark.parametrize for efficient testing of
multiple input/output combinations.
"""

import math

import pytest

from src.sqc_smoother.utils import (
    format_float,
    format_rate,
    print_debug,
    print_error,
    print_success,
    print_warning,
)

pytestmark = pytest.mark.unit  # All tests in this module are unit tests

# =============================================================================
# Float Formatting Tests
# =============================================================================


class TestFormatFloat:
    """Tests for 17-significant-digit float formatting."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-20, "9.9999999999999995e-21"),
            (float("nan"), "nan"),
            (float("inf"), "inf"),
            (-0.0, "0"),
        ],
        ids=["tenth", "one", "negative", "tiny", "nan", "inf", "negative_zero"],
    )
    def test_format(self, value, expected):
        """Test formatting of representative values."""
        assert format_float(value) == expected

    @pytest.mark.parametrize(
        "value",
        [1.0 / 3.0, math.pi, 2.0**-1074, 1.7976931348623157e308, -0.0],
        ids=["third", "pi", "subnormal", "max", "negative_zero"],
    )
    def test_round_trip(self, value):
        """Test formatted values parse back to the same double."""
        assert float(format_float(value)) == value


# =============================================================================
# Rate Formatting Tests
# =============================================================================


class TestFormatRate:
    """Tests for membership rate formatting."""

    @pytest.mark.parametrize(
        "numerator,denominator,expected",
        [
            (199, 200, "199/200 (99.5%)"),
            (3, 3, "3/3 (100.0%)"),
            (0, 5, "0/5 (0.0%)"),
            (0, 0, "0/0"),
        ],
        ids=["partial", "all", "none", "empty"],
    )
    def test_format_rate(self, numerator, denominator, expected):
        """Test rate strings with and without a percentage."""
        assert format_rate(numerator, denominator) == expected


# =============================================================================
# Console Message Tests
# =============================================================================


class TestMessages:
    """Tests for standardized console messages."""

    def test_print_error(self, capsys):
        """Test error messages carry the error prefix."""
        print_error("something broke")
        assert "Error: something broke" in capsys.readouterr().out

    def test_print_warning(self, capsys):
        """Test warnings are printed."""
        print_warning("careful")
        assert "careful" in capsys.readouterr().out

    def test_print_success(self, capsys):
        """Test success messages carry a check mark."""
        print_success("done")
        assert "✓ done" in capsys.readouterr().out

    def test_print_debug_respects_setting(self, capsys, mocker):
        """Test debug output only appears when debug is enabled."""
        mocker.patch("src.sqc_smoother.utils.settings.debug", False)
        print_debug("hidden")
        assert "hidden" not in capsys.readouterr().out

        mocker.patch("src.sqc_smoother.utils.settings.debug", True)
        print_debug("shown")
        assert "shown" in capsys.readouterr().out
