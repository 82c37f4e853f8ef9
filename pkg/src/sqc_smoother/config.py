from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .constants import RICCATI_FORM_ALIASES, RICCATI_FORMS


class Settings(BaseSettings):
    """Runtime settings for the smoother harness.

    Values come from the environment or a local .env file. Numeric
    tolerances that are part of the estimator contract live in constants.py.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        populate_by_name=True,  # Allow both field names and aliases
        extra="ignore",  # Ignore unknown environment variables
    )

    # Debug
    debug: bool = Field(default=False, validation_alias="SMOOTHER_DEBUG")

    # Forward Riccati variant
    riccati_form: str = Field(
        default="derived", validation_alias="SMOOTHER_RICCATI_FORM"
    )

    # Reverse filter relinearization passes per step
    relinearize_iterations: int = Field(
        default=0, validation_alias="SMOOTHER_RELINEARIZE_ITERATIONS"
    )

    # Monte Carlo concurrency
    workers: int = Field(default=1, validation_alias="SMOOTHER_WORKERS")

    # Resolution of set_samples.csv
    sample_grid_points: int = Field(
        default=81, validation_alias="SMOOTHER_SAMPLE_GRID_POINTS"
    )

    @field_validator("riccati_form")
    @classmethod
    def validate_riccati_form(cls, v: str) -> str:
        """Validate the Riccati variant; aliases map to their canonical name."""
        v_lower = v.lower()
        v_lower = RICCATI_FORM_ALIASES.get(v_lower, v_lower)
        if v_lower not in RICCATI_FORMS:
            allowed = [*RICCATI_FORMS, *RICCATI_FORM_ALIASES]
            raise ValueError(f'Unsupported Riccati form: "{v}". Allowed: {", ".join(allowed)}')
        return v_lower

    @field_validator("relinearize_iterations")
    @classmethod
    def validate_relinearize_iterations(cls, v: int) -> int:
        """Validate relinearization count is reasonable (0-10)."""
        if v < 0 or v > 10:
            raise ValueError("relinearize_iterations must be between 0 and 10")
        return v

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        """Validate worker count is reasonable (1-64)."""
        if v < 1 or v > 64:
            raise ValueError("workers must be between 1 and 64")
        return v

    @field_validator("sample_grid_points")
    @classmethod
    def validate_sample_grid_points(cls, v: int) -> int:
        """Validate grid resolution (5-401 points per axis)."""
        if v < 5 or v > 401:
            raise ValueError("sample_grid_points must be between 5 and 401")
        return v


settings = Settings()
