"""Configuration settings for the sparse bandit laboratory."""

from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="BANDITLAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Output
    output_root: str = "results"
    log_level: str = "INFO"

    # Datadog tracing (optional)
    dd_api_key: Optional[str] = None
    dd_service: str = "sparse-bandit-lab"
    dd_env: str = "research"

    # Solver defaults
    kkt_tolerance: float = 1e-6
    lasso_tol: float = 1e-10
    lasso_max_sweeps: int = 10_000
    cavi_tol: float = 1e-5
    cavi_bandit_sweeps: int = 100
    cavi_offline_sweeps: int = 1000
    cavi_inner_tol: float = 1e-9

    # Diagnostics
    enumeration_budget: int = 1_000_000
    compatibility_restarts: int = 32
    margin_min_events: int = 5


# Global settings instance
settings = Settings()
