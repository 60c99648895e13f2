"""
Run configuration shared by all CLI subcommands
"""

from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import (
    DEFAULT_GAMMA_RANGE,
    DEFAULT_N_RANGE,
    DEFAULT_NU_RANGE,
    settings,
)


class Normalization(str, Enum):
    """Which return series the pipeline works on"""
    ORIGINAL = "original"
    LOCAL = "local"
    BOTH = "both"


class LossConvention(str, Enum):
    """Squared-difference convention used to rank models"""
    SUM = "sum"
    MEAN = "mean"


MODEL_NAMES = ("gaussian", "cwg", "k", "skewed_t")


class RunConfig(BaseModel):
    """Configuration of one pipeline run (TOML file plus flag overrides)"""

    model_config = ConfigDict(extra="forbid")

    input: Optional[Path] = None
    output_dir: Path = Path("output")
    normalization: Normalization = Normalization.ORIGINAL
    window: int = Field(default_factory=lambda: settings.default_window, ge=2)
    include_current: bool = True
    bins: int = Field(default_factory=lambda: settings.default_bins, ge=2)
    loss_convention: LossConvention = LossConvention.SUM
    models: List[str] = Field(default_factory=lambda: list(MODEL_NAMES))
    n_range: Tuple[float, float] = DEFAULT_N_RANGE
    nu_range: Tuple[float, float] = DEFAULT_NU_RANGE
    gamma_range: Tuple[float, float] = DEFAULT_GAMMA_RANGE
    correlation_bin_width: float = Field(default_factory=lambda: settings.correlation_bin_width, gt=0.0)
    asymmetry_bin_width: float = Field(default_factory=lambda: settings.asymmetry_bin_width, gt=0.0)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0)

    @field_validator("bins")
    @classmethod
    def validate_bins(cls, v):
        if v % 5 != 0:
            raise ValueError(f"bins must be divisible by 5 so the 0.2 corners align with bin edges, got {v}")
        return v

    @field_validator("models")
    @classmethod
    def validate_models(cls, v):
        if not v:
            raise ValueError("model list must not be empty")
        unknown = [m for m in v if m not in MODEL_NAMES]
        if unknown:
            raise ValueError(f"unknown models {unknown}; choose from {list(MODEL_NAMES)}")
        return v

    @model_validator(mode="after")
    def validate_ranges(self):
        for name in ("n_range", "nu_range", "gamma_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be an increasing interval, got ({lo}, {hi})")
        if self.n_range[0] <= 0.0:
            raise ValueError("n_range must be positive")
        if self.nu_range[0] <= 2.0:
            raise ValueError("nu_range must lie above 2")
        return self
