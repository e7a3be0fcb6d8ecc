"""
Application configuration management using Pydantic Settings.
Supports environment variables (prefix CRITSPEC_) and .env files for configuration.
"""

from functools import lru_cache

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Thresholds(BaseModel):
    """Every numeric threshold used by verdict rules; overridable per run."""

    model_config = ConfigDict(extra="forbid")

    # Trichotomy
    trichotomy_slope: float = Field(default=0.01, gt=0, description="ε, per-step slope")
    trichotomy_band: float = Field(default=0.5, gt=0, description="δ, bounded band half-width")
    trichotomy_window: int = Field(default=8, ge=2)

    # Summability verdicts
    cauchy_window: int = Field(default=5, ge=2)
    cauchy_tolerance: float = Field(default=1e-4, gt=0)
    divergence_radius: float = Field(default=1e6, gt=0)
    tail_tolerance: float = Field(default=1e-6, gt=0)
    norlund_ratio: float = Field(default=0.2, gt=0, lt=1)
    regularity_slack: float = Field(default=0.05, ge=0)

    # Orbits and measures
    merge_radius: float = Field(default=1e-12, gt=0)
    degeneracy_radius: float = Field(default=1e-12, gt=0)
    infinity_radius: float = Field(default=1e-8, gt=0, description="spherical radius around ∞")
    kernel_exclusion: float = Field(default=1e-9, gt=0)
    scan_null: float = Field(default=1e-3, gt=0)
    coherence_max: float = Field(default=0.9, gt=0, lt=1)

    # Diagnostics
    o_n_proxy: float = Field(default=0.01, gt=0)
    abel_nonzero: float = Field(default=1e-3, gt=0)
    corollary_delta: float = Field(default=1e-3, gt=0)
    radius_slack: float = Field(default=0.05, ge=0)
    m_measure: float = Field(default=1e-6, gt=0)
    cycle_tolerance: float = Field(default=1e-6, gt=0)
    max_period: int = Field(default=20, ge=1)


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_prefix="CRITSPEC_",
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Settings
    app_name: str = "critspec"
    app_version: str = "1.0.0"
    environment: str = "development"

    # Observability
    log_level: str = "INFO"
    log_format: str = "console"
    metrics_enabled: bool = True
    tracing_enabled: bool = False

    # Precision defaults (PrecisionConfig)
    mantissa_bits: int = Field(default=53, ge=53)
    series_truncation: int = Field(default=64, ge=1)
    root_tolerance: float = Field(default=1e-12, gt=0)
    grid_resolution: int = Field(default=64, ge=1)

    # Root finder budget
    root_max_iterations: int = Field(default=500, ge=1)
    root_restart_attempts: int = Field(default=5, ge=1)

    # Series evaluation
    max_terms: int = Field(default=2**25, ge=16)
    chunk_size: int = Field(default=2**20, ge=16)
    max_orbit_steps: int = Field(default=2**20, ge=16)

    # Batch execution
    threads: int = Field(default=1, ge=1)
    seed: int = 0

    thresholds: Thresholds = Field(default_factory=Thresholds)


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


# Export settings instance
settings = get_settings()
