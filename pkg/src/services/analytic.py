"""
Analytic copula densities

Four families are evaluated on points and grids: the Gaussian copula, the
correlation-weighted Gaussian mixture (CWG), the K-copula of the bivariate
normal-Wishart mixture, and the skewed Student's t copula of the normal
mean-variance mixture with inverse gamma mixing. All densities are formed in
log space as log f(x, y) - log f(x) - log f(y) at the marginal quantiles.
"""

import math
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from loguru import logger
from scipy import integrate, special, stats

from ..config import SYMMETRIC_GAMMA_CUTOFF, TAIL_CORNER
from ..exceptions import DomainError, ParameterError
from ..models import (
    CopulaGrid,
    CopulaModel,
    CorrelationSet,
    CWGModel,
    GaussianModel,
    KModel,
    QuadratureSpec,
    SkewedTModel,
    TabulatedQuantile,
    TailAsymmetry,
)
from .empirical import EmpiricalCopulaService
from .numerics import NumericsService


ArrayLike = Union[float, np.ndarray]
LOG2 = math.log(2.0)


def _check_correlation(c: float) -> None:
    if not -1.0 < c < 1.0:
        raise ParameterError(f"correlation must lie in the open interval (-1, 1), got {c}")


def _check_probability(p: ArrayLike) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("probabilities must lie strictly inside (0, 1)")
    return p


def _as_output(values) -> ArrayLike:
    values = np.asarray(values, dtype=float)
    return float(values) if values.ndim == 0 else values


def _gaussian_log_density(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    one_minus = 1.0 - c * c
    exponent = (c * c * (x * x + y * y) - 2.0 * c * x * y) / (2.0 * one_minus)
    return -0.5 * math.log(one_minus) - exponent


def _cwg_sum(x: np.ndarray, y: np.ndarray, model: CWGModel) -> np.ndarray:
    total = np.zeros(np.broadcast(x, y).shape)
    for c, weight in model.entries:
        if weight == 0.0:
            continue
        total = total + weight * np.exp(_gaussian_log_density(x, y, c))
    return total


def _k_joint_logpdf(x: np.ndarray, y: np.ndarray, c: float, n: float) -> np.ndarray:
    one_minus = 1.0 - c * c
    q = (x * x - 2.0 * c * x * y + y * y) / one_minus
    return (
        math.log(n / (4.0 * math.pi))
        - 0.5 * math.log(one_minus)
        - special.gammaln(n / 2.0)
        + NumericsService.log_bessel_mixture(n / 2.0 - 1.0, n * q / 4.0)
    )


def _k_log_copula(x: np.ndarray, y: np.ndarray, c: float, n: float) -> np.ndarray:
    marginal = AnalyticCopulaService.k_marginal_logpdf
    return _k_joint_logpdf(x, y, c, n) - marginal(x, n) - marginal(y, n)


def _is_symmetric(gamma: float) -> bool:
    return abs(gamma) < SYMMETRIC_GAMMA_CUTOFF


def _check_nu(nu: float) -> None:
    if not nu > 2.0:
        raise ParameterError(f"nu must exceed 2, got {nu}")


def _skewed_t_log_density(quad, lin, gsg: float, nu: float, d: int, half_logdet: float):
    """
    Log density of the d-variate skewed t (normal mean-variance mixture)

    quad = z' S^-1 z, lin = z' S^-1 gamma, gsg = gamma' S^-1 gamma.
    gsg == 0 gives the symmetric Student's t.
    """
    lam = 0.5 * (nu + d)
    base = (
        -special.gammaln(0.5 * nu)
        - 0.5 * d * math.log(math.pi * nu)
        - half_logdet
        - lam * np.log1p(quad / nu)
    )
    if gsg == 0.0:
        return base + special.gammaln(lam)
    s = np.sqrt((nu + quad) * gsg)
    return base + (1.0 - lam) * LOG2 + lin + NumericsService.log_bessel_k(lam, s) + lam * np.log(s)


def _skewed_t_joint_logpdf(x: np.ndarray, y: np.ndarray, c: float, nu: float, gamma: float) -> np.ndarray:
    one_minus = 1.0 - c * c
    quad = (x * x - 2.0 * c * x * y + y * y) / one_minus
    if _is_symmetric(gamma):
        return _skewed_t_log_density(quad, 0.0, 0.0, nu, 2, 0.5 * math.log(one_minus))
    # Sigma^-1 (gamma, gamma) = gamma / (1 + c) * (1, 1)
    lin = gamma * (x + y) / (1.0 + c)
    gsg = 2.0 * gamma * gamma / (1.0 + c)
    return _skewed_t_log_density(quad, lin, gsg, nu, 2, 0.5 * math.log(one_minus))


def _skewed_t_log_copula(x: np.ndarray, y: np.ndarray, c: float, nu: float, gamma: float) -> np.ndarray:
    return (
        _skewed_t_joint_logpdf(x, y, c, nu, gamma)
        - AnalyticCopulaService.skewed_t_marginal_logpdf(x, nu, gamma)
        - AnalyticCopulaService.skewed_t_marginal_logpdf(y, nu, gamma)
    )


def _marginal_quantile(model: CopulaModel, p: np.ndarray) -> np.ndarray:
    if isinstance(model, (GaussianModel, CWGModel)):
        return np.asarray(NumericsService.std_normal_quantile(p), dtype=float)
    if isinstance(model, KModel):
        return np.asarray(AnalyticCopulaService.k_marginal_quantile(p, model.n), dtype=float)
    if isinstance(model, SkewedTModel):
        return np.asarray(AnalyticCopulaService.skewed_t_marginal_quantile(p, model.nu, model.gamma), dtype=float)
    raise ParameterError(f"unsupported copula model {type(model).__name__}")


def _marginal_logpdf(model: CopulaModel, x: np.ndarray) -> np.ndarray:
    if isinstance(model, (GaussianModel, CWGModel)):
        return stats.norm.logpdf(x)
    if isinstance(model, KModel):
        return AnalyticCopulaService.k_marginal_logpdf(x, model.n)
    if isinstance(model, SkewedTModel):
        return AnalyticCopulaService.skewed_t_marginal_logpdf(x, model.nu, model.gamma)
    raise ParameterError(f"unsupported copula model {type(model).__name__}")


def _density_at(model: CopulaModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Copula density at marginal abscissae x = F^-1(u), y = F^-1(v)"""
    if isinstance(model, GaussianModel):
        return np.exp(_gaussian_log_density(x, y, model.c))
    if isinstance(model, CWGModel):
        return _cwg_sum(x, y, model)
    if isinstance(model, KModel):
        return np.exp(_k_log_copula(x, y, model.c, model.n))
    if isinstance(model, SkewedTModel):
        return np.exp(_skewed_t_log_copula(x, y, model.c, model.nu, model.gamma))
    raise ParameterError(f"unsupported copula model {type(model).__name__}")


def _grid_abscissae(model: CopulaModel, bins: int) -> np.ndarray:
    """
    Marginal quantiles of the bin centres

    Point-symmetric margins are odd, so the upper half is the reflected
    lower half and the grid is point-symmetric bit for bit.
    """
    centers = AnalyticCopulaService.bin_centers(bins)
    if not AnalyticCopulaService.is_point_symmetric(model):
        return _marginal_quantile(model, centers)
    half = bins // 2
    x = np.zeros(bins)
    x[:half] = _marginal_quantile(model, centers[:half])
    x[bins - half:] = -x[:half][::-1]
    return x


class AnalyticCopulaService:
    """Densities, marginals and grids of the four analytic copula families"""

    @staticmethod
    def bin_centers(bins: int) -> np.ndarray:
        """Centres (i - 0.5)/B of B equal bins on (0, 1)"""
        return (np.arange(bins) + 0.5) / bins

    @staticmethod
    def gaussian_density(u: ArrayLike, v: ArrayLike, c: float) -> ArrayLike:
        """
        Bivariate Gaussian copula density

        Args:
            u, v: Points in (0, 1), broadcast against each other
            c: Correlation in (-1, 1)

        Returns:
            Copula density
        """
        _check_correlation(c)
        x = NumericsService.std_normal_quantile(_check_probability(u))
        y = NumericsService.std_normal_quantile(_check_probability(v))
        return _as_output(np.exp(_gaussian_log_density(x, y, c)))

    @staticmethod
    def cwg_density(u: ArrayLike, v: ArrayLike, entries) -> ArrayLike:
        """Weighted sum of Gaussian copula densities over (c, weight) entries"""
        model = entries if isinstance(entries, CWGModel) else CWGModel(entries=list(entries))
        x = NumericsService.std_normal_quantile(_check_probability(u))
        y = NumericsService.std_normal_quantile(_check_probability(v))
        return _as_output(_cwg_sum(x, y, model))

    @staticmethod
    def cwg_from_correlations(corrs: CorrelationSet, bin_width: Optional[float] = None) -> CWGModel:
        """Mixture weighted by the correlation histogram, one entry per occupied bin"""
        hist = EmpiricalCopulaService.correlation_histogram(corrs, bin_width)
        weights = hist.weights
        entries = [(float(c), float(w)) for c, w in zip(hist.centers, weights) if w > 0.0]
        total = sum(w for _, w in entries)
        entries = [(c, w / total) for c, w in entries]
        logger.debug(f"Correlation-weighted Gaussian with {len(entries)} occupied bins")
        return CWGModel(entries=entries)

    @staticmethod
    def k_marginal_logpdf(x: ArrayLike, n: float) -> ArrayLike:
        """Log density of the K-distribution margin (unit variance)"""
        x = np.asarray(x, dtype=float)
        b = n * x * x / 4.0
        log_norm = 0.5 * math.log(n / (4.0 * math.pi)) - special.gammaln(n / 2.0)
        return log_norm + NumericsService.log_bessel_mixture(n / 2.0 - 0.5, b)

    @staticmethod
    def k_marginal_pdf(
        x: ArrayLike,
        n: float,
        method: str = "bessel",
        spec: Optional[QuadratureSpec] = None,
    ) -> ArrayLike:
        """
        Marginal density of the bivariate K-distribution

        Args:
            x: Abscissa(e)
            n: Fluctuation parameter N > 0
            method: "bessel" for the closed form, "quadrature" for the Gamma mixture
            spec: Quadrature settings for the mixture form

        Returns:
            Density value(s)
        """
        if not n > 0.0:
            raise ParameterError(f"N must be positive, got {n}")
        if method == "bessel":
            return _as_output(np.exp(AnalyticCopulaService.k_marginal_logpdf(x, n)))
        if method != "quadrature":
            raise ParameterError(f"unknown method {method!r}")
        shape = n / 2.0 - 0.5
        if shape <= 0.0:
            raise ParameterError("the quadrature form of the K margin needs N > 1")
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))

        # z^(N/2-1) z^(-1/2) is absorbed into the weight of shape N/2 - 1/2
        def kernel(z):
            return np.exp(-n * np.outer(1.0 / (4.0 * z), x_arr * x_arr))

        prefactor = math.sqrt(n / (4.0 * math.pi)) * math.exp(special.gammaln(shape) - special.gammaln(n / 2.0))
        values = prefactor * NumericsService.gamma_expectation(kernel, shape, spec)
        return values.reshape(np.shape(x)) if np.ndim(x) else float(values[0])

    @staticmethod
    def k_marginal_cdf(x: ArrayLike, n: float, spec: Optional[QuadratureSpec] = None) -> ArrayLike:
        """
        Marginal CDF of the K-distribution as a Gamma mixture of normal CDFs

        Each mixture component is centred normal with variance 2z/N,
        z ~ Gamma(N/2, 1). The lower tail is integrated for -|x| and
        reflected, so F(x) + F(-x) = 1 holds to rounding.
        """
        if not n > 0.0:
            raise ParameterError(f"N must be positive, got {n}")
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        ax = np.abs(x_arr).ravel()

        def lower_tail(z):
            return special.ndtr(-np.outer(np.sqrt(n / (2.0 * z)), ax))

        lower = NumericsService.robust_gamma_expectation(lower_tail, n / 2.0, spec)
        cdf = np.where(x_arr.ravel() < 0.0, lower, 1.0 - lower).reshape(x_arr.shape)
        return cdf.reshape(np.shape(x)) if np.ndim(x) else float(cdf[0])

    @staticmethod
    @lru_cache(maxsize=256)
    def k_quantile_table(n: float) -> TabulatedQuantile:
        """Cached quantile table of the K margin"""
        logger.debug(f"Building K-margin quantile table for N={n:.6g}")
        return NumericsService.build_quantile_table(lambda x: AnalyticCopulaService.k_marginal_cdf(x, n))

    @staticmethod
    def k_marginal_quantile(p: ArrayLike, n: float) -> ArrayLike:
        """Quantile of the K margin, table-bracketed and refined by root finding"""
        if not n > 0.0:
            raise ParameterError(f"N must be positive, got {n}")
        p_arr = _check_probability(p)
        table = AnalyticCopulaService.k_quantile_table(float(n))
        x = NumericsService.tabulated_quantile(table, lambda t: AnalyticCopulaService.k_marginal_cdf(t, n), p_arr)
        return _as_output(x)

    @staticmethod
    def k_copula_density(u: ArrayLike, v: ArrayLike, c: float, n: float) -> ArrayLike:
        """
        Bivariate K-copula density

        Args:
            u, v: Points in (0, 1), broadcast against each other
            c: Mean correlation in (-1, 1)
            n: Fluctuation parameter N > 0

        Returns:
            Copula density
        """
        _check_correlation(c)
        x = np.asarray(AnalyticCopulaService.k_marginal_quantile(u, n), dtype=float)
        y = np.asarray(AnalyticCopulaService.k_marginal_quantile(v, n), dtype=float)
        return _as_output(np.exp(_k_log_copula(x, y, c, n)))

    @staticmethod
    def skewed_t_marginal_logpdf(x: ArrayLike, nu: float, gamma: float) -> ArrayLike:
        """Log density of the skewed t margin X = gamma W + sqrt(W) Q"""
        x = np.asarray(x, dtype=float)
        if _is_symmetric(gamma):
            return _skewed_t_log_density(x * x, 0.0, 0.0, nu, 1, 0.0)
        return _skewed_t_log_density(x * x, x * gamma, gamma * gamma, nu, 1, 0.0)

    @staticmethod
    def skewed_t_marginal_pdf(x: ArrayLike, nu: float, gamma: float) -> ArrayLike:
        """Marginal density of the skewed Student's t-distribution"""
        _check_nu(nu)
        if _is_symmetric(gamma):
            return _as_output(stats.t.pdf(x, df=nu))
        return _as_output(np.exp(AnalyticCopulaService.skewed_t_marginal_logpdf(x, nu, gamma)))

    @staticmethod
    def skewed_t_marginal_cdf(x: ArrayLike, nu: float, gamma: float) -> ArrayLike:
        """
        Marginal CDF of the skewed t

        The symmetric case is Student's t with nu degrees of freedom. Otherwise
        the closed-form density is integrated from the nearer infinity, which
        keeps the power-law tails accurate where a mixture of normal CDFs
        would need the mixing variable far out in its own tail.
        """
        _check_nu(nu)
        if _is_symmetric(gamma):
            return _as_output(stats.t.cdf(x, df=nu))
        def pdf(t):
            return np.exp(AnalyticCopulaService.skewed_t_marginal_logpdf(t, nu, gamma))

        return NumericsService.cdf_from_pdf(pdf, x)

    @staticmethod
    @lru_cache(maxsize=256)
    def skewed_t_quantile_table(nu: float, gamma: float) -> TabulatedQuantile:
        """Cached quantile table of the skewed t margin"""
        logger.debug(f"Building skewed t quantile table for nu={nu:.6g}, gamma={gamma:.6g}")
        return NumericsService.build_quantile_table(lambda x: AnalyticCopulaService.skewed_t_marginal_cdf(x, nu, gamma))

    @staticmethod
    def skewed_t_marginal_quantile(p: ArrayLike, nu: float, gamma: float) -> ArrayLike:
        """Quantile of the skewed t margin"""
        _check_nu(nu)
        p_arr = _check_probability(p)
        if _is_symmetric(gamma):
            return _as_output(stats.t.ppf(p_arr, df=nu))
        table = AnalyticCopulaService.skewed_t_quantile_table(float(nu), float(gamma))
        cdf = AnalyticCopulaService.skewed_t_marginal_cdf
        x = NumericsService.tabulated_quantile(table, lambda t: cdf(t, nu, gamma), p_arr)
        return _as_output(x)

    @staticmethod
    def skewed_t_copula_density(u: ArrayLike, v: ArrayLike, c: float, nu: float, gamma: float) -> ArrayLike:
        """
        Bivariate skewed Student's t copula density with gamma_1 = gamma_2

        Args:
            u, v: Points in (0, 1), broadcast against each other
            c: Correlation of the normal component
            nu: Degrees of freedom (> 2)
            gamma: Common skewness parameter

        Returns:
            Copula density
        """
        _check_correlation(c)
        _check_nu(nu)
        x = np.asarray(AnalyticCopulaService.skewed_t_marginal_quantile(u, nu, gamma), dtype=float)
        y = np.asarray(AnalyticCopulaService.skewed_t_marginal_quantile(v, nu, gamma), dtype=float)
        return _as_output(np.exp(_skewed_t_log_copula(x, y, c, nu, gamma)))

    @staticmethod
    def copula_density(model: CopulaModel, u: ArrayLike, v: ArrayLike) -> ArrayLike:
        """Evaluate any supported copula model at (u, v)"""
        if isinstance(model, GaussianModel):
            return AnalyticCopulaService.gaussian_density(u, v, model.c)
        if isinstance(model, CWGModel):
            return AnalyticCopulaService.cwg_density(u, v, model)
        if isinstance(model, KModel):
            return AnalyticCopulaService.k_copula_density(u, v, model.c, model.n)
        if isinstance(model, SkewedTModel):
            return AnalyticCopulaService.skewed_t_copula_density(u, v, model.c, model.nu, model.gamma)
        raise ParameterError(f"unsupported copula model {type(model).__name__}")

    @staticmethod
    def is_point_symmetric(model: CopulaModel) -> bool:
        """True when cop(u, v) = cop(1 - u, 1 - v), i.e. every family but the skewed t"""
        return not isinstance(model, SkewedTModel) or _is_symmetric(model.gamma)

    @staticmethod
    def evaluate_grid(model: CopulaModel, bins: int) -> CopulaGrid:
        """
        Copula density at the B x B bin centres ((i - 0.5)/B, (j - 0.5)/B)

        Row i is the u-bin, column j the v-bin.
        """
        if bins < 2:
            raise ParameterError(f"bins must be at least 2, got {bins}")
        x = _grid_abscissae(model, bins)
        density = np.asarray(_density_at(model, x[:, None], x[None, :]), dtype=float)
        grid = CopulaGrid(bins=bins, density=density, model=model)
        total = grid.riemann_sum
        if bins >= 20 and abs(total - 1.0) > 1e-3:
            logger.warning(f"{model.family} grid with {bins} bins has Riemann sum {total:.6f}")
        return grid

    @staticmethod
    def conditional_mass(model: CopulaModel, u: float, rel_tol: float = 1e-10) -> float:
        """
        Integral of cop(u, v) over v in (0, 1), which is 1 for a proper copula

        Integrated in the abscissa y = F^-1(v), where the integrand is the joint
        density over the first margin's density and has no endpoint spikes.
        """
        x = float(_marginal_quantile(model, _check_probability(np.array([u])))[0])

        def integrand(y: float) -> float:
            y_arr = np.array([y])
            value = _density_at(model, np.array([x]), y_arr) * np.exp(_marginal_logpdf(model, y_arr))
            return float(np.asarray(value).reshape(-1)[0])

        lower, _ = integrate.quad(integrand, -np.inf, 0.0, epsabs=0.0, epsrel=rel_tol, limit=500)
        upper, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=rel_tol, limit=500)
        return lower + upper

    @staticmethod
    def corner_masses(model: CopulaModel, resolution: int = 40) -> TailAsymmetry:
        """
        Integrated 0.2 x 0.2 corner masses of an analytic copula

        Composite midpoint rule with resolution x resolution points per corner.
        """
        offsets = (np.arange(resolution) + 0.5) / resolution * TAIL_CORNER
        low = offsets
        high = 1.0 - TAIL_CORNER + offsets
        area = TAIL_CORNER * TAIL_CORNER

        def mass(us: np.ndarray, vs: np.ndarray) -> float:
            values = np.asarray(AnalyticCopulaService.copula_density(model, us[:, None], vs[None, :]), dtype=float)
            return float(np.clip(values.mean() * area, 0.0, 1.0))

        return TailAsymmetry(
            lower_lower=mass(low, low),
            upper_upper=mass(high, high),
            lower_upper=mass(low, high),
            upper_lower=mass(high, low),
        )

    @staticmethod
    def clear_quantile_tables() -> None:
        """Drop cached marginal quantile tables"""
        AnalyticCopulaService.k_quantile_table.cache_clear()
        AnalyticCopulaService.skewed_t_quantile_table.cache_clear()
