"""
Market data models: price series, return matrices and correlation sets
"""

from datetime import date
from enum import Enum
from typing import Annotated, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator

from ..exceptions import InsufficientDataError, ParameterError, RejectedInputError


def as_float_array(v) -> np.ndarray:
    """Validator function for read-only float arrays"""
    arr = np.array(v, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def as_int_array(v) -> np.ndarray:
    """Validator function for read-only integer arrays"""
    arr = np.array(v, dtype=np.int64, copy=True)
    arr.setflags(write=False)
    return arr


FloatArray = Annotated[np.ndarray, BeforeValidator(as_float_array)]
IntArray = Annotated[np.ndarray, BeforeValidator(as_int_array)]


class ReturnKind(str, Enum):
    """Normalization state of a return matrix"""
    ORIGINAL = "original"
    LOCALLY_NORMALIZED = "locally_normalized"


class PriceSeries(BaseModel):
    """Adjusted closing prices of one ticker"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ticker: str
    prices: FloatArray
    dates: Optional[List[date]] = None

    @field_validator("prices")
    @classmethod
    def validate_prices(cls, v: np.ndarray, info):
        ticker = info.data.get("ticker", "?")
        if v.ndim != 1:
            raise RejectedInputError(f"prices of {ticker} must be one-dimensional")
        if len(v) < 2:
            raise InsufficientDataError(
                f"{ticker}: at least 2 prices required, got {len(v)}"
            )
        bad = np.flatnonzero(~(v > 0))
        if bad.size:
            raise RejectedInputError(
                f"{ticker}: non-positive or missing price at position {int(bad[0])}"
            )
        return v

    @model_validator(mode="after")
    def validate_dates(self):
        if self.dates is not None:
            if len(self.dates) != len(self.prices):
                raise RejectedInputError(
                    f"{self.ticker}: {len(self.dates)} dates for {len(self.prices)} prices"
                )
            if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
                raise RejectedInputError(f"{self.ticker}: dates must be strictly increasing")
        return self

    def __len__(self) -> int:
        return len(self.prices)


class ReturnMatrix(BaseModel):
    """T x K matrix of returns, one column per ticker"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: FloatArray
    tickers: List[str]
    kind: ReturnKind = ReturnKind.ORIGINAL
    window: Optional[int] = Field(default=None, ge=2)
    dates: Optional[List[date]] = None

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: np.ndarray):
        if v.ndim == 1:
            v = v.reshape(-1, 1)
            v.setflags(write=False)
        if v.ndim != 2:
            raise RejectedInputError("return matrix must be two-dimensional")
        if not np.all(np.isfinite(v)):
            raise RejectedInputError("return matrix contains non-finite entries")
        return v

    @model_validator(mode="after")
    def validate_shape(self):
        if len(self.tickers) != self.values.shape[1]:
            raise RejectedInputError(
                f"{len(self.tickers)} tickers for {self.values.shape[1]} columns"
            )
        if self.kind == ReturnKind.LOCALLY_NORMALIZED and self.window is None:
            raise ParameterError("locally normalized returns require a window")
        if self.kind == ReturnKind.ORIGINAL and self.window is not None:
            raise ParameterError("original returns carry no window")
        if self.dates is not None and len(self.dates) != self.values.shape[0]:
            raise RejectedInputError(
                f"{len(self.dates)} dates for {self.values.shape[0]} rows"
            )
        return self

    @property
    def n_obs(self) -> int:
        """Number of observations T"""
        return self.values.shape[0]

    @property
    def n_assets(self) -> int:
        """Number of columns K"""
        return self.values.shape[1]

    @property
    def n_pairs(self) -> int:
        return self.n_assets * (self.n_assets - 1) // 2

    def column(self, k: int) -> np.ndarray:
        return self.values[:, k]

    def moment_diagnostics(self) -> List[Tuple[str, float, float]]:
        """Per-column sample mean and variance"""
        means = self.values.mean(axis=0)
        variances = self.values.var(axis=0)
        return [
            (ticker, float(m), float(s))
            for ticker, m, s in zip(self.tickers, means, variances)
        ]


class CorrelationSet(BaseModel):
    """Pearson correlations of all unordered column pairs k < l"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    tickers: List[str]
    index_k: IntArray
    index_l: IntArray
    values: FloatArray

    @model_validator(mode="after")
    def validate_pairs(self):
        n = len(self.tickers)
        expected = n * (n - 1) // 2
        if not (len(self.index_k) == len(self.index_l) == len(self.values) == expected):
            raise RejectedInputError(
                f"expected {expected} correlation pairs for {n} tickers, got {len(self.values)}"
            )
        if np.any(self.index_k >= self.index_l):
            raise RejectedInputError("correlation pairs must satisfy k < l")
        if np.any(np.abs(self.values) > 1.0):
            raise RejectedInputError("correlations must lie in [-1, 1]")
        return self

    @property
    def mean_correlation(self) -> float:
        """Arithmetic mean over all pairs"""
        return float(np.mean(self.values))

    @property
    def pairs(self) -> List[Tuple[int, int, float]]:
        """Pairs as (k, l, c) with zero-based column indices"""
        return [
            (int(k), int(l), float(c))
            for k, l, c in zip(self.index_k, self.index_l, self.values)
        ]

    def __len__(self) -> int:
        return len(self.values)
