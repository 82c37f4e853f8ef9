"""Tests for config.py - Settings validation.

This module tests the Pydantic Settings model including:
- Default values
- Validation of the Riccati variant and numeric ranges
- Environment variable loading
- The pre-commit lint hooks
"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from src.sqc_smoother.config import Settings

pytestmark = pytest.mark.unit  # All tests in this module are unit tests

# =============================================================================
# Default Values Tests
# =============================================================================


class TestDefaultSettings:
    """Tests for default settings values."""

    def test_default_debug_false(self):
        """Test debug is disabled by default."""
        settings = Settings(_env_file=None)
        assert settings.debug is False

    def test_default_riccati_form(self):
        """Test the derived Riccati form is the default."""
        settings = Settings(_env_file=None)
        assert settings.riccati_form == "derived"

    def test_default_relinearize_iterations(self):
        """Test relinearization is off by default."""
        settings = Settings(_env_file=None)
        assert settings.relinearize_iterations == 0

    def test_default_workers(self):
        """Test runs execute serially by default."""
        settings = Settings(_env_file=None)
        assert settings.workers == 1

    def test_default_sample_grid_points(self):
        """Test default set sampling resolution is 81 points per axis."""
        settings = Settings(_env_file=None)
        assert settings.sample_grid_points == 81


# =============================================================================
# Riccati Form Validation Tests
# =============================================================================


class TestRiccatiFormValidation:
    """Tests for riccati_form field validation."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            ("derived", "derived"),
            ("DERIVED", "derived"),  # Lowercased
            ("sigma-output", "sigma-output"),
            ("Sigma-Output", "sigma-output"),
            ("paper-literal", "sigma-output"),  # Alias
            ("Paper-Literal", "sigma-output"),
        ],
        ids=[
            "derived",
            "derived_upper",
            "sigma_output",
            "sigma_output_mixed",
            "literal_alias",
            "literal_alias_mixed",
        ],
    )
    def test_valid_forms(self, value, expected):
        """Test valid Riccati forms are accepted and lowercased."""
        settings = Settings(riccati_form=value)
        assert settings.riccati_form == expected

    @pytest.mark.parametrize(
        "value",
        ["joseph", "", "derived; rm -rf /"],
        ids=["unknown", "empty", "injection"],
    )
    def test_invalid_forms_rejected(self, value):
        """Test unknown Riccati forms are rejected."""
        with pytest.raises(ValidationError) as exc_info:
            Settings(riccati_form=value)
        assert "Unsupported Riccati form" in str(exc_info.value)


# =============================================================================
# Numeric Range Validation Tests
# =============================================================================


class TestRangeValidation:
    """Tests for bounded integer settings."""

    @pytest.mark.parametrize("value", [0, 1, 10])
    def test_valid_relinearize_iterations(self, value):
        """Test relinearization counts within 0-10 are accepted."""
        assert Settings(relinearize_iterations=value).relinearize_iterations == value

    @pytest.mark.parametrize("value", [-1, 11])
    def test_invalid_relinearize_iterations(self, value):
        """Test relinearization counts outside 0-10 are rejected."""
        with pytest.raises(ValidationError) as exc_info:
            Settings(relinearize_iterations=value)
        assert "relinearize_iterations must be between 0 and 10" in str(exc_info.value)

    @pytest.mark.parametrize("value", [1, 8, 64])
    def test_valid_workers(self, value):
        """Test worker counts within 1-64 are accepted."""
        assert Settings(workers=value).workers == value

    @pytest.mark.parametrize("value", [0, 65])
    def test_invalid_workers(self, value):
        """Test worker counts outside 1-64 are rejected."""
        with pytest.raises(ValidationError) as exc_info:
            Settings(workers=value)
        assert "workers must be between 1 and 64" in str(exc_info.value)

    @pytest.mark.parametrize("value", [4, 402])
    def test_invalid_sample_grid_points(self, value):
        """Test grid resolutions outside 5-401 are rejected."""
        with pytest.raises(ValidationError) as exc_info:
            Settings(sample_grid_points=value)
        assert "sample_grid_points must be between 5 and 401" in str(exc_info.value)


# =============================================================================
# Environment Variable Loading Tests
# =============================================================================


class TestEnvironmentVariables:
    """Tests for environment variable loading."""

    def test_load_debug_from_env(self, monkeypatch):
        """Test loading debug flag from environment."""
        monkeypatch.setenv("SMOOTHER_DEBUG", "true")
        settings = Settings(_env_file=None)
        assert settings.debug is True

    def test_load_riccati_form_from_env(self, monkeypatch):
        """Test loading the Riccati variant from environment."""
        monkeypatch.setenv("SMOOTHER_RICCATI_FORM", "sigma-output")
        settings = Settings(_env_file=None)
        assert settings.riccati_form == "sigma-output"

    def test_load_workers_from_env(self, monkeypatch):
        """Test loading worker count from environment."""
        monkeypatch.setenv("SMOOTHER_WORKERS", "4")
        settings = Settings(_env_file=None)
        assert settings.workers == 4

    def test_invalid_env_value_rejected(self, monkeypatch):
        """Test environment values go through the same validators."""
        monkeypatch.setenv("SMOOTHER_RELINEARIZE_ITERATIONS", "50")
        with pytest.raises(ValidationError):
            Settings(_env_file=None)

    def test_settings_extra_ignored(self, monkeypatch):
        """Test that unknown environment variables are ignored."""
        monkeypatch.setenv("SMOOTHER_UNKNOWN", "some_value")
        # Should not raise
        settings = Settings(_env_file=None)
        assert not hasattr(settings, "smoother_unknown")


class TestProjectTooling:
    """Tests for the lint hooks declared next to pyproject.toml."""

    def test_pre_commit_runs_ruff(self):
        """Test the pre-commit dev dependency has a config using ruff."""
        root = Path(__file__).parent.parent
        config = (root / ".pre-commit-config.yaml").read_text(encoding="utf-8")
        assert "pre-commit" in (root / "pyproject.toml").read_text(encoding="utf-8")
        assert "astral-sh/ruff-pre-commit" in config
        assert "id: ruff" in config
        assert "id: ruff-format" in config
