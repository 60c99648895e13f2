"""
copuladep

Empirical and analytical pairwise copula densities of return time series:
rank-transformed copula histograms, Gaussian, correlation-weighted Gaussian,
K- and skewed Student's t copulas, and least squares comparisons between them.
"""

__version__ = "1.0.0"
__description__ = "Empirical and analytical pairwise copula densities of return time series"
