"""
Sampling service: bivariate draws from the generative models behind each copula

Every sampler returns a (T, 2) array. Generators come from RngSpec streams
so identical seeds reproduce identical draws.
"""

import math
from typing import List, Tuple, Union

import numpy as np
from loguru import logger

from ..config import SYNTHETIC_TICKER_FORMAT
from ..exceptions import ParameterError
from ..models import (
    CopulaModel,
    CWGModel,
    GaussianModel,
    KModel,
    RngSpec,
    SkewedTModel,
    WishartFactor,
)


RngLike = Union[RngSpec, np.random.Generator, int]

# Rows per Wishart block; fixed so draws do not depend on memory settings
WISHART_BLOCK_ELEMENTS = 1 << 22

K_METHODS = ("gamma_mixture", "wishart")

# Synthetic prices start here and compound 0.01 x sampled log returns
SYNTHETIC_START_PRICE = 100.0
SYNTHETIC_RETURN_SCALE = 0.01


def _generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    return RngSpec(seed=int(rng)).generator()


def _check_correlation(c: float) -> None:
    if not -1.0 < c < 1.0:
        raise ParameterError(f"correlation must lie in the open interval (-1, 1), got {c}")


def _check_size(T: int) -> None:
    if T < 1:
        raise ParameterError(f"sample size must be positive, got {T}")


def _correlated_normals(c: float, T: int, gen: np.random.Generator) -> np.ndarray:
    return gen.standard_normal((T, 2)) @ CopulaSampler.correlation_factor(c).T


def _sample_k_wishart(c: float, n: int, T: int, gen: np.random.Generator) -> np.ndarray:
    L = CopulaSampler.correlation_factor(c)
    rows = max(1, WISHART_BLOCK_ELEMENTS // (2 * n))
    out = np.empty((T, 2))
    for start in range(0, T, rows):
        stop = min(T, start + rows)
        a = L @ gen.standard_normal((stop - start, 2, n))
        g = gen.standard_normal((stop - start, n, 1))
        out[start:stop] = (a @ g)[..., 0] / math.sqrt(n)
    return out


class CopulaSampler:
    """Seeded samplers of the generative copula models"""

    @staticmethod
    def correlation_factor(c: float) -> np.ndarray:
        """Lower Cholesky factor L of [[1, c], [c, 1]]"""
        _check_correlation(c)
        return np.linalg.cholesky(np.array([[1.0, c], [c, 1.0]]))

    @staticmethod
    def sample_bivariate_gaussian(c: float, T: int, rng: RngLike) -> np.ndarray:
        """T draws from the standard bivariate normal with correlation c"""
        _check_size(T)
        return _correlated_normals(c, T, _generator(rng))

    @staticmethod
    def sample_wishart_factor(c: float, n: int, rng: RngLike) -> WishartFactor:
        """2 x N matrix with i.i.d. Normal(0, Sigma) columns"""
        gen = _generator(rng)
        a = CopulaSampler.correlation_factor(c) @ gen.standard_normal((2, n))
        return WishartFactor(a=a, n=n)

    @staticmethod
    def sample_k_bivariate(
        c: float,
        n: float,
        T: int,
        rng: RngLike,
        method: str = "gamma_mixture",
    ) -> np.ndarray:
        """
        T draws from the bivariate K-distribution

        Args:
            c: Mean correlation
            n: Fluctuation parameter N (integer for the Wishart method)
            T: Number of pairs
            rng: Seed, RngSpec or Generator
            method: "gamma_mixture" draws z ~ Gamma(N/2) and a normal with
                covariance (2z/N) Sigma; "wishart" draws A with Normal(0, Sigma)
                columns and a normal with covariance A A^T / N

        Returns:
            Array of shape (T, 2)
        """
        _check_size(T)
        _check_correlation(c)
        gen = _generator(rng)
        if method == "gamma_mixture":
            if not n > 0.0:
                raise ParameterError(f"N must be positive, got {n}")
            z = gen.gamma(n / 2.0, 1.0, size=T)
            return np.sqrt(2.0 * z / n)[:, None] * _correlated_normals(c, T, gen)
        if method == "wishart":
            if n < 1 or float(n) != int(n):
                raise ParameterError(f"the Wishart sampler needs a positive integer N, got {n}")
            return _sample_k_wishart(c, int(n), T, gen)
        raise ParameterError(f"unknown K sampling method {method!r}; choose from {list(K_METHODS)}")

    @staticmethod
    def sample_inverse_gamma(nu: float, T: int, rng: RngLike) -> np.ndarray:
        """W ~ IG(nu/2, nu/2) as the reciprocal of Gamma(nu/2, scale 2/nu); E[W] = nu/(nu-2)"""
        if not nu > 0.0:
            raise ParameterError(f"nu must be positive, got {nu}")
        return 1.0 / _generator(rng).gamma(nu / 2.0, 2.0 / nu, size=T)

    @staticmethod
    def sample_skewed_t_bivariate(c: float, nu: float, gamma: float, T: int, rng: RngLike) -> np.ndarray:
        """
        T draws of Z = gamma W (1, 1) + sqrt(W) Q

        W ~ IG(nu/2, nu/2) and Q ~ Normal(0, Sigma); gamma = 0 gives the
        bivariate Student's t with nu degrees of freedom.
        """
        _check_size(T)
        _check_correlation(c)
        if not nu > 2.0:
            raise ParameterError(f"nu must exceed 2, got {nu}")
        gen = _generator(rng)
        w = CopulaSampler.sample_inverse_gamma(nu, T, gen)
        q = _correlated_normals(c, T, gen)
        return gamma * w[:, None] + np.sqrt(w)[:, None] * q

    @staticmethod
    def sample_cwg_bivariate(model: CWGModel, T: int, rng: RngLike) -> np.ndarray:
        """Gaussian pairs whose correlation is drawn per row from the mixture weights"""
        _check_size(T)
        gen = _generator(rng)
        cs = np.array([c for c, _ in model.entries])
        weights = np.array([w for _, w in model.entries])
        chosen = cs[gen.choice(len(cs), size=T, p=weights / weights.sum())]
        e = gen.standard_normal((T, 2))
        return np.column_stack([e[:, 0], chosen * e[:, 0] + np.sqrt(1.0 - chosen ** 2) * e[:, 1]])

    @staticmethod
    def sample_pairs(model: CopulaModel, T: int, rng: RngLike, method: str = "gamma_mixture") -> np.ndarray:
        """Draw T pairs from the generative model of a copula family"""
        if isinstance(model, GaussianModel):
            return CopulaSampler.sample_bivariate_gaussian(model.c, T, rng)
        if isinstance(model, CWGModel):
            return CopulaSampler.sample_cwg_bivariate(model, T, rng)
        if isinstance(model, KModel):
            return CopulaSampler.sample_k_bivariate(model.c, model.n, T, rng, method)
        if isinstance(model, SkewedTModel):
            return CopulaSampler.sample_skewed_t_bivariate(model.c, model.nu, model.gamma, T, rng)
        raise ParameterError(f"unsupported copula model {type(model).__name__}")

    @staticmethod
    def sample_columns(
        model: CopulaModel,
        n_columns: int,
        T: int,
        rng: RngSpec,
        method: str = "gamma_mixture",
    ) -> Tuple[List[str], np.ndarray]:
        """
        Synthetic price columns built from pairwise draws

        Pair j uses stream j of the RngSpec and fills columns 2j and 2j + 1;
        an odd column count drops the last partner. Prices start at 100 and
        compound 0.01 times the sampled values as log returns.

        Returns:
            Tuple of (tickers SYN001..., (T + 1) x n_columns price matrix)
        """
        if n_columns < 2:
            raise ParameterError(f"need at least 2 columns, got {n_columns}")
        _check_size(T)
        draws = [
            CopulaSampler.sample_pairs(model, T, rng.generator(stream), method)
            for stream in range((n_columns + 1) // 2)
        ]
        returns = np.column_stack(draws)[:, :n_columns] * SYNTHETIC_RETURN_SCALE
        log_prices = np.vstack([np.zeros((1, n_columns)), np.cumsum(returns, axis=0)])
        prices = SYNTHETIC_START_PRICE * np.exp(log_prices)
        tickers = [SYNTHETIC_TICKER_FORMAT.format(k + 1) for k in range(n_columns)]
        logger.info(f"Sampled {n_columns} {model.family} columns of length {T} (seed {rng.seed})")
        return tickers, prices
