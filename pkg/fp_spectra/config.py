"""
Configuration management using pydantic-settings.

This module provides type-safe configuration loading from environment variables
(prefix ``SPECTRA_``) and .env files. All settings are validated at startup.
"""

from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables or .env file.

    Environment variables take precedence over .env file values.

    Attributes:
        workers: Default number of worker processes for enumeration and scans
        budget: Maximum number of matrices enumerated before switching to sampling
        sample_prefix_cap: Upper bound on the prefixes drawn in sampling mode
        incidence_ratio_cap: Empirical cap on the incidence-bound ratio in verification
        seed: Default root seed for generated sets and sampling
        log_level: Log level used by the CLI in verbose mode
    """

    workers: int = Field(
        default=1,
        ge=1,
        description="Default parallelism (SPECTRA_WORKERS)",
    )

    budget: int = Field(
        default=10**9,
        ge=1,
        description="Enumeration budget, counted in matrices",
    )

    sample_prefix_cap: int = Field(
        default=200_000,
        ge=1,
        description="Maximum number of prefixes drawn when the budget is exceeded",
    )

    incidence_ratio_cap: float = Field(
        default=4.0,
        gt=0,
        description="Regression cap on I/RHS for the incidence bound",
    )

    seed: int = Field(
        default=0,
        ge=0,
        description="Default root seed",
    )

    log_level: str = Field(
        default="INFO",
        description="Log level for verbose CLI output",
    )

    model_config = SettingsConfigDict(
        env_prefix="SPECTRA_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Normalize the level name and check that loguru knows it."""
        level = v.strip().upper()
        if level not in LOG_LEVELS:
            msg = f"Unknown log level '{v}'. Expected one of {', '.join(LOG_LEVELS)}"
            raise ValueError(msg)
        return level


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Get application settings singleton.

    The settings are loaded once and reused for the lifetime of the process.

    Returns:
        Settings: The application settings instance

    Raises:
        ValidationError: If settings are invalid

    Example:
        >>> settings = get_settings()
        >>> settings.budget
        1000000000
    """
    return Settings()
