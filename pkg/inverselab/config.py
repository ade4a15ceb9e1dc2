"""Application configuration using pydantic-settings."""

from functools import lru_cache
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolbox settings loaded from environment variables.

    Attributes:
        log_level: Root logging level used by the CLI.
        default_seed: Seed used when an experiment does not set one.
        output_dir: Directory experiments write into when ``--out`` is absent.
        csv_float_format: printf-style format for every float written to CSV.
        pgm_maxval: Maximum grey value of written PGM files.
        selftest_seed: Seed of the built-in acceptance run.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="INVERSELAB_",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    # Experiments
    default_seed: int = 1
    output_dir: str = "out"
    selftest_seed: int = 20240601

    # Result files
    csv_float_format: str = "%.17g"  # 17 significant digits round-trip doubles
    pgm_maxval: int = 65535

    @property
    def is_verbose(self) -> bool:
        """Whether debug output is enabled."""
        return self.log_level == "DEBUG"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance.

    Returns:
        Settings: Toolbox settings.
    """
    return Settings()
