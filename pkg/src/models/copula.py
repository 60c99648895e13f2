"""
Copula models: uniform series, histograms, analytic grids and tail statistics
"""

from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..exceptions import ParameterError, RejectedInputError
from .market import FloatArray, IntArray


def _check_correlation(c: float) -> float:
    if not -1.0 < c < 1.0:
        raise ParameterError(f"correlation must lie in the open interval (-1, 1), got {c}")
    return c


class UniformSeries(BaseModel):
    """Rank-transformed observations strictly inside (0, 1)"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: FloatArray

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: np.ndarray):
        if v.ndim != 1 or len(v) == 0:
            raise RejectedInputError("uniform series must be a non-empty vector")
        if np.any(v <= 0.0) or np.any(v >= 1.0):
            raise RejectedInputError("uniform values must lie strictly inside (0, 1)")
        return v

    def __len__(self) -> int:
        return len(self.values)


class CopulaHistogram(BaseModel):
    """B x B binned empirical copula density"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    bins: int = Field(..., ge=2)
    density: FloatArray
    sample_count: int = Field(..., ge=1)
    pair_count: int = Field(1, ge=1)
    kind: str = "empirical"

    @model_validator(mode="after")
    def validate_density(self):
        if self.density.shape != (self.bins, self.bins):
            raise RejectedInputError(
                f"density shape {self.density.shape} does not match {self.bins} bins"
            )
        if np.any(self.density < 0.0):
            raise RejectedInputError("copula histogram cells must be non-negative")
        total = float(self.density.sum()) / self.bins ** 2
        if abs(total - 1.0) > 1e-9:
            raise RejectedInputError(f"copula histogram integrates to {total}, expected 1")
        return self

    @property
    def cell_area(self) -> float:
        return 1.0 / self.bins ** 2

    @property
    def cell_mass(self) -> np.ndarray:
        """Probability per cell, density times cell area"""
        return self.density * self.cell_area

    def transpose(self) -> "CopulaHistogram":
        return self.model_copy(update={"density": as_readonly(self.density.T)})


def as_readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


class GaussianModel(BaseModel):
    """Gaussian copula with correlation c"""

    model_config = ConfigDict(frozen=True)

    family: Literal["gaussian"] = "gaussian"
    c: float

    @field_validator("c")
    @classmethod
    def validate_c(cls, v):
        return _check_correlation(v)

    def parameters(self) -> Dict[str, float]:
        return {"c": self.c}


class CWGModel(BaseModel):
    """Correlation-weighted mixture of Gaussian copulas"""

    model_config = ConfigDict(frozen=True)

    family: Literal["cwg"] = "cwg"
    entries: List[Tuple[float, float]]

    @field_validator("entries")
    @classmethod
    def validate_entries(cls, v):
        if not v:
            raise ParameterError("correlation-weighted Gaussian needs at least one entry")
        for c, w in v:
            _check_correlation(c)
            if w < 0.0:
                raise ParameterError(f"mixture weight must be non-negative, got {w}")
        total = float(np.sum([w for _, w in v]))
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(f"mixture weights sum to {total}, expected 1")
        return v

    def parameters(self) -> Dict[str, float]:
        mean_c = float(sum(c * w for c, w in self.entries))
        return {"entries": float(len(self.entries)), "weighted_mean_c": mean_c}


class KModel(BaseModel):
    """K-copula with mean correlation c and fluctuation parameter N"""

    model_config = ConfigDict(frozen=True)

    family: Literal["k"] = "k"
    c: float
    n: float

    @field_validator("c")
    @classmethod
    def validate_c(cls, v):
        return _check_correlation(v)

    @field_validator("n")
    @classmethod
    def validate_n(cls, v):
        if not v > 0.0:
            raise ParameterError(f"N must be positive, got {v}")
        return v

    def parameters(self) -> Dict[str, float]:
        return {"c": self.c, "N": self.n}


class SkewedTModel(BaseModel):
    """Skewed Student's t copula with gamma_1 = gamma_2 = gamma"""

    model_config = ConfigDict(frozen=True)

    family: Literal["skewed_t"] = "skewed_t"
    c: float
    nu: float
    gamma: float = 0.0

    @field_validator("c")
    @classmethod
    def validate_c(cls, v):
        return _check_correlation(v)

    @field_validator("nu")
    @classmethod
    def validate_nu(cls, v):
        if not v > 2.0:
            raise ParameterError(f"nu must exceed 2, got {v}")
        return v

    @field_validator("gamma")
    @classmethod
    def validate_gamma(cls, v):
        if not np.isfinite(v):
            raise ParameterError("gamma must be finite")
        return v

    def parameters(self) -> Dict[str, float]:
        return {"c": self.c, "nu": self.nu, "gamma": self.gamma}


CopulaModel = Annotated[
    Union[GaussianModel, CWGModel, KModel, SkewedTModel],
    Field(discriminator="family"),
]


class CopulaGrid(BaseModel):
    """B x B analytic copula density at bin centres, or a difference grid"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    bins: int = Field(..., ge=2)
    density: FloatArray
    model: Optional[CopulaModel] = None
    kind: Literal["analytic", "difference"] = "analytic"
    sample_count: Optional[int] = None

    @model_validator(mode="after")
    def validate_density(self):
        if self.density.shape != (self.bins, self.bins):
            raise RejectedInputError(
                f"density shape {self.density.shape} does not match {self.bins} bins"
            )
        if self.kind == "analytic" and np.any(~(self.density >= 0.0)):
            raise RejectedInputError("analytic copula grid contains negative or NaN cells")
        return self

    @property
    def riemann_sum(self) -> float:
        return float(self.density.sum()) / self.bins ** 2


class TailAsymmetry(BaseModel):
    """Integrated 0.2 x 0.2 corner masses and the derived asymmetries"""

    model_config = ConfigDict(frozen=True)

    lower_lower: float = Field(..., ge=0.0, le=1.0)
    upper_upper: float = Field(..., ge=0.0, le=1.0)
    lower_upper: float = Field(..., ge=0.0, le=1.0)
    upper_lower: float = Field(..., ge=0.0, le=1.0)

    @property
    def p(self) -> float:
        """Positive tail dependence asymmetry"""
        return self.upper_upper - self.lower_lower

    @property
    def q(self) -> float:
        """Negative tail dependence asymmetry"""
        return self.lower_upper - self.upper_lower

    @property
    def corner_mass(self) -> Tuple[float, float, float, float]:
        return (self.lower_lower, self.upper_upper, self.lower_upper, self.upper_lower)


class ValueHistogram(BaseModel):
    """One-dimensional histogram over fixed-width bins"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    bin_width: float = Field(..., gt=0.0)
    centers: FloatArray
    counts: IntArray

    @model_validator(mode="after")
    def validate_lengths(self):
        if len(self.centers) != len(self.counts):
            raise RejectedInputError("histogram centers and counts differ in length")
        return self

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def weights(self) -> np.ndarray:
        """Relative frequency per bin"""
        return self.counts / self.total

    @property
    def density(self) -> np.ndarray:
        """Probability density per bin, weights over bin width"""
        return self.weights / self.bin_width


class AsymmetryReport(BaseModel):
    """Tail dependence asymmetries of every unordered pair"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ticker_k: List[str]
    ticker_l: List[str]
    p: FloatArray
    q: FloatArray
    hist_p: ValueHistogram
    hist_q: ValueHistogram

    @property
    def n_pairs(self) -> int:
        return len(self.p)

    def summary(self) -> Dict[str, float]:
        """Mean, standard deviation and standard error of p and q"""
        n = self.n_pairs
        out: Dict[str, float] = {"pairs": float(n)}
        for name, values in (("p", self.p), ("q", self.q)):
            std = float(values.std(ddof=1)) if n > 1 else 0.0
            out[f"{name}_mean"] = float(values.mean())
            out[f"{name}_std"] = std
            out[f"{name}_sem"] = std / np.sqrt(n)
        return out
