"""
Numerical helper models: quadrature settings and tabulated quantiles
"""

from enum import Enum
from functools import cached_property
from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.interpolate import PchipInterpolator

from ..exceptions import ParameterError, QuantileRangeError
from .market import FloatArray


class QuadratureScheme(str, Enum):
    """Integration scheme for integrals against z^(shape-1) e^(-z)"""
    GENERALIZED_GAUSS_LAGUERRE = "generalized_gauss_laguerre"
    ADAPTIVE = "adaptive"


class QuadratureSpec(BaseModel):
    """Quadrature scheme, starting node count and relative tolerance"""

    model_config = ConfigDict(frozen=True)

    scheme: QuadratureScheme = QuadratureScheme.GENERALIZED_GAUSS_LAGUERRE
    nodes: int = Field(64, ge=8)
    rel_tol: float = Field(1e-9, gt=0.0, le=1e-3)


class TabulatedQuantile(BaseModel):
    """Monotone cubic inverse of a tabulated CDF"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid_x: FloatArray
    grid_F: FloatArray
    interpolation: Literal["monotone_cubic"] = "monotone_cubic"

    @model_validator(mode="after")
    def validate_grid(self):
        if self.grid_x.ndim != 1 or self.grid_x.shape != self.grid_F.shape:
            raise ParameterError("quantile table abscissae and CDF values must be equal-length vectors")
        if len(self.grid_x) < 4:
            raise ParameterError("quantile table needs at least 4 points")
        if np.any(np.diff(self.grid_x) <= 0.0) or np.any(np.diff(self.grid_F) <= 0.0):
            raise ParameterError("quantile table must be strictly increasing")
        if self.grid_F[0] <= 0.0 or self.grid_F[-1] >= 1.0:
            raise ParameterError("quantile table CDF values must lie inside (0, 1)")
        return self

    @cached_property
    def interpolator(self) -> PchipInterpolator:
        return PchipInterpolator(self.grid_F, self.grid_x, extrapolate=False)

    @property
    def p_range(self) -> Tuple[float, float]:
        return float(self.grid_F[0]), float(self.grid_F[-1])

    def evaluate(self, p):
        """Interpolated quantile, monotone in p"""
        p = np.asarray(p, dtype=float)
        lo, hi = self.p_range
        if np.any(p < lo) or np.any(p > hi):
            raise QuantileRangeError(f"probability outside tabulated range [{lo:.3g}, {hi:.3g}]")
        return self.interpolator(p)

    def bracket(self, p: float) -> Tuple[float, float]:
        """Grid abscissae enclosing the quantile of p"""
        lo, hi = self.p_range
        if not lo <= p <= hi:
            raise QuantileRangeError(f"probability {p} outside tabulated range [{lo:.3g}, {hi:.3g}]")
        i = int(np.searchsorted(self.grid_F, p, side="left"))
        i = min(max(i, 1), len(self.grid_F) - 1)
        return float(self.grid_x[i - 1]), float(self.grid_x[i])
