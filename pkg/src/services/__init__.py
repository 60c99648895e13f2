"""
Services for copuladep
"""

from .analytic import AnalyticCopulaService
from .empirical import EmpiricalCopulaService
from .fitting import CopulaFitService
from .market_data import MarketDataService
from .numerics import NumericsService
from .sampling import CopulaSampler
from .storage import StorageService

__all__ = [
    "AnalyticCopulaService",
    "CopulaFitService",
    "CopulaSampler",
    "EmpiricalCopulaService",
    "MarketDataService",
    "NumericsService",
    "StorageService",
]
