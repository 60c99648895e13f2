"""
Configuration management for copuladep
"""

from pathlib import Path
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with environment variable support"""

    model_config = SettingsConfigDict(
        env_prefix="COPULADEP_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Application Configuration
    environment: str = Field("development")
    log_level: str = Field("INFO")
    log_dir: Path = Field(Path("logs"))
    log_to_file: bool = Field(False)

    # Pipeline defaults
    default_bins: int = Field(20, ge=2)
    default_window: int = Field(13, ge=2)
    default_seed: int = Field(20140101)
    missing_date_tolerance: float = Field(0.01, ge=0.0, lt=1.0)

    # Histogram bin widths
    correlation_bin_width: float = Field(0.02, gt=0.0)
    asymmetry_bin_width: float = Field(0.01, gt=0.0)

    # Quadrature and quantile tables
    quadrature_nodes: int = Field(64, ge=8)
    quadrature_rel_tol: float = Field(1e-9, gt=0.0, le=1e-3)
    max_quadrature_nodes: int = Field(4096, ge=8)
    quantile_table_points: int = Field(2001, ge=16)
    quantile_tail: float = Field(1e-8, gt=0.0, lt=0.5)


# Global settings instance
settings = Settings()


APP_NAME = "copuladep"
APP_DESCRIPTION = "Empirical and analytical pairwise copula densities of return time series"
APP_VERSION = "1.0.0"

# Width of the corner squares used for tail dependence asymmetry
TAIL_CORNER = 0.2

# Coarse scan size per fitted parameter
GOLDEN_SCAN_POINTS = 16

# Below this |gamma| the skewed t family uses the symmetric closed form
SYMMETRIC_GAMMA_CUTOFF = 1e-6

# Process exit codes
EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

SYNTHETIC_TICKER_FORMAT = "SYN{:03d}"

# Default search ranges for fitted parameters
DEFAULT_N_RANGE = (1.0, 100.0)
DEFAULT_NU_RANGE = (2.1, 100.0)
DEFAULT_GAMMA_RANGE = (-0.5, 0.5)
