"""
Sampling models: random stream specification and Wishart factors
"""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import ParameterError
from .market import FloatArray


class RngSpec(BaseModel):
    """Seed and bit generator; streams are split with SeedSequence.spawn"""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(..., ge=0, lt=2 ** 64)
    algorithm: Literal["pcg64", "philox"] = "pcg64"

    def generator(self, stream: int = 0) -> np.random.Generator:
        """Generator for an independent child stream"""
        if stream < 0:
            raise ParameterError(f"stream index must be non-negative, got {stream}")
        child = np.random.SeedSequence(self.seed).spawn(stream + 1)[stream]
        if self.algorithm == "philox":
            return np.random.Generator(np.random.Philox(child))
        return np.random.Generator(np.random.PCG64(child))


class WishartFactor(BaseModel):
    """2 x N random matrix A; A A^T / N is one covariance draw"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    a: FloatArray
    n: int = Field(..., ge=1)

    @model_validator(mode="after")
    def validate_shape(self):
        if self.a.shape != (2, self.n):
            raise ParameterError(f"Wishart factor must have shape (2, {self.n}), got {self.a.shape}")
        return self

    @property
    def covariance(self) -> np.ndarray:
        return self.a @ self.a.T / self.n
