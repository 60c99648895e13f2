"""
Domain models for copuladep
"""

from .market import PriceSeries, ReturnMatrix, ReturnKind, CorrelationSet
from .copula import (
    UniformSeries,
    CopulaHistogram,
    CopulaGrid,
    CopulaModel,
    GaussianModel,
    CWGModel,
    KModel,
    SkewedTModel,
    TailAsymmetry,
    ValueHistogram,
    AsymmetryReport,
)
from .numerics import QuadratureScheme, QuadratureSpec, TabulatedQuantile
from .fit import LossReport, TracePoint, FitResult, ComparisonRow, ComparisonTable
from .sampling import RngSpec, WishartFactor
from .run import RunConfig, Normalization, LossConvention, MODEL_NAMES

__all__ = [
    "PriceSeries",
    "ReturnMatrix",
    "ReturnKind",
    "CorrelationSet",
    "UniformSeries",
    "CopulaHistogram",
    "CopulaGrid",
    "CopulaModel",
    "GaussianModel",
    "CWGModel",
    "KModel",
    "SkewedTModel",
    "TailAsymmetry",
    "ValueHistogram",
    "AsymmetryReport",
    "QuadratureScheme",
    "QuadratureSpec",
    "TabulatedQuantile",
    "LossReport",
    "TracePoint",
    "FitResult",
    "ComparisonRow",
    "ComparisonTable",
    "RngSpec",
    "WishartFactor",
    "RunConfig",
    "Normalization",
    "LossConvention",
    "MODEL_NAMES",
]
