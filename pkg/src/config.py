"""Application configuration using Pydantic Settings."""

import os
from pathlib import Path
from typing import Optional

from pydantic import ValidationError as PydanticValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.domain.exceptions import ConfigError


class Settings(BaseSettings):
    """Process-level configuration from ``SPINSQ_*`` environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="SPINSQ_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Configuration
    log_level: str = "INFO"
    output_dir: str = "output"
    threads: Optional[int] = None

    # Numerical guards
    max_bruteforce_spins: int = 8
    norm_drift_tol: float = 1e-9
    positivity_warn_tol: float = 1e-7
    positivity_fail_tol: float = 1e-5
    oat_y_warn_threshold: float = 0.1

    def __init__(self, **kwargs):
        """Initialize settings and validate numeric fields."""
        try:
            super().__init__(**kwargs)
        except PydanticValidationError as e:
            problems = "; ".join(
                f"SPINSQ_{'_'.join(map(str, error['loc'])).upper()}: {error['msg']}"
                for error in e.errors()
            )
            raise ConfigError(f"Invalid settings: {problems}") from e
        self._validate()

    def _validate(self):
        """Validate configuration consistency."""
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"SPINSQ_THREADS must be positive, got {self.threads}")
        if self.positivity_warn_tol > self.positivity_fail_tol:
            raise ConfigError(
                "SPINSQ_POSITIVITY_WARN_TOL must not exceed SPINSQ_POSITIVITY_FAIL_TOL"
            )
        if self.max_bruteforce_spins < 1:
            raise ConfigError("SPINSQ_MAX_BRUTEFORCE_SPINS must be at least 1")

    def resolve_workers(self, requested: Optional[int] = None) -> int:
        """
        Number of worker processes for sweeps.

        ``SPINSQ_THREADS`` wins over the command-line value.

        Args:
            requested: Worker count asked for on the command line

        Returns:
            int: Worker count, at least 1
        """
        if self.threads is not None:
            return self.threads
        if requested is not None:
            return max(1, requested)
        return 1

    def ensure_directories(self):
        """Create the output directory if it doesn't exist."""
        Path(self.output_dir).mkdir(parents=True, exist_ok=True)


def _fallback_settings() -> Settings:
    return Settings.model_construct(
        log_level=os.environ.get("SPINSQ_LOG_LEVEL", "INFO"),
        output_dir="output",
        threads=None,
        max_bruteforce_spins=8,
        norm_drift_tol=1e-9,
        positivity_warn_tol=1e-7,
        positivity_fail_tol=1e-5,
        oat_y_warn_threshold=0.1,
    )


# Global settings instance
try:
    settings = Settings()
except (ConfigError, PydanticValidationError):
    # Keep imports working with a broken environment; the CLI re-validates.
    settings = _fallback_settings()
