"""
Tests for configuration module.

CRITICAL: TEST INTEGRITY DIRECTIVE
NEVER remove, disable, or work around a failing test without explicit user review and approval.
When a test fails:
1. STOP - Do not proceed with implementation
2. ANALYZE - Understand why the test is failing
3. DISCUSS - Present the failure to the user
4. WAIT - Get explicit user approval before modifying tests
"""

import pytest
from fp_spectra.config import Settings, get_settings
from pydantic import ValidationError

SPECTRA_VARS = (
    "SPECTRA_WORKERS",
    "SPECTRA_BUDGET",
    "SPECTRA_SAMPLE_PREFIX_CAP",
    "SPECTRA_INCIDENCE_RATIO_CAP",
    "SPECTRA_SEED",
    "SPECTRA_LOG_LEVEL",
)


@pytest.fixture(autouse=True)
def clear_settings_cache():
    """Clear the settings cache before and after each test to ensure test isolation."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """Run in an empty directory with no SPECTRA_* variables set."""
    for name in SPECTRA_VARS:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path


class TestSettings:
    """Tests for Settings class."""

    def test_settings_uses_default_values(self, clean_env):
        """Test that Settings falls back to defaults when nothing is configured."""
        settings = Settings()

        assert settings.workers == 1
        assert settings.budget == 10**9
        assert settings.sample_prefix_cap == 200_000
        assert settings.incidence_ratio_cap == 4.0
        assert settings.seed == 0
        assert settings.log_level == "INFO"

    def test_settings_loads_from_env_correctly(self, clean_env, monkeypatch):
        """Test that Settings loads configuration from SPECTRA_* environment variables."""
        monkeypatch.setenv("SPECTRA_WORKERS", "4")
        monkeypatch.setenv("SPECTRA_BUDGET", "5000")
        monkeypatch.setenv("SPECTRA_SEED", "42")

        settings = Settings()

        assert settings.workers == 4
        assert settings.budget == 5000
        assert settings.seed == 42

    def test_settings_normalizes_log_level(self, clean_env, monkeypatch):
        """Test that the log level is upper-cased and stripped."""
        monkeypatch.setenv("SPECTRA_LOG_LEVEL", "  debug ")

        settings = Settings()

        assert settings.log_level == "DEBUG"

    def test_settings_rejects_unknown_log_level(self, clean_env, monkeypatch):
        """Test that Settings raises ValidationError for a level loguru does not know."""
        monkeypatch.setenv("SPECTRA_LOG_LEVEL", "LOUD")

        with pytest.raises(ValidationError) as exc_info:
            Settings()

        assert "log_level" in str(exc_info.value).lower()

    def test_settings_rejects_zero_workers(self, clean_env, monkeypatch):
        """Test that workers must be at least 1."""
        monkeypatch.setenv("SPECTRA_WORKERS", "0")

        with pytest.raises(ValidationError) as exc_info:
            Settings()

        assert "workers" in str(exc_info.value).lower()

    def test_settings_rejects_non_positive_ratio_cap(self, clean_env, monkeypatch):
        """Test that the incidence ratio cap must be positive."""
        monkeypatch.setenv("SPECTRA_INCIDENCE_RATIO_CAP", "0")

        with pytest.raises(ValidationError):
            Settings()


class TestGetSettings:
    """Tests for get_settings() singleton function."""

    def test_get_settings_returns_singleton(self, clean_env):
        """Test that get_settings() returns the same instance on multiple calls."""
        settings1 = get_settings()
        settings2 = get_settings()

        assert settings1 is settings2

    def test_cache_clear_picks_up_new_environment(self, clean_env, monkeypatch):
        """Test that clearing the cache re-reads the environment."""
        assert get_settings().budget == 10**9

        monkeypatch.setenv("SPECTRA_BUDGET", "123")
        get_settings.cache_clear()

        assert get_settings().budget == 123


class TestSettingsDotEnvLoading:
    """Tests for .env file loading functionality."""

    def test_settings_loads_from_dotenv_file(self, clean_env):
        """Test that Settings can load from a .env file."""
        (clean_env / ".env").write_text("SPECTRA_BUDGET=777\nSPECTRA_SEED=9\n")

        settings = Settings()

        assert settings.budget == 777
        assert settings.seed == 9

    def test_env_variables_override_dotenv_file(self, clean_env, monkeypatch):
        """Test that environment variables take precedence over .env file."""
        (clean_env / ".env").write_text("SPECTRA_BUDGET=777\n")
        monkeypatch.setenv("SPECTRA_BUDGET", "888")

        settings = Settings()

        assert settings.budget == 888
