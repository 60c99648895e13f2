"""
Special functions, quadrature and inversion primitives

Integrals against the Gamma weight z^(shape-1) e^(-z) are evaluated with
generalized Gauss-Laguerre rules built by Golub-Welsch from the Jacobi
matrix, so the shape parameter need not be an integer. The rules are
normalized (weights sum to one), which keeps large shapes finite; the
unnormalized integral multiplies by Gamma(shape) in log space.
"""

import math
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy import integrate, optimize, special
from scipy.linalg import eigh_tridiagonal

from ..config import settings
from ..exceptions import DomainError, QuadratureAccuracyError, QuantileRangeError
from ..models import QuadratureScheme, QuadratureSpec, TabulatedQuantile


ArrayLike = Union[float, np.ndarray]
Integrand = Callable[[np.ndarray], np.ndarray]

# Orders above this use the uniform large-order expansion
DEBYE_MIN_ORDER = 100.0

TINY = np.finfo(float).tiny

# Gauss-Legendre panels of the density integrator grow geometrically with the
# distance from the pivot, by at most this factor on 1 + distance
PANEL_GROWTH = 1.5
PANEL_ORDER = 24


def _log_bessel_k_debye(nu: float, x: np.ndarray) -> np.ndarray:
    """Uniform asymptotic expansion of log K_nu(x) for large nu"""
    z = x / nu
    sq = np.sqrt(1.0 + z * z)
    t = 1.0 / sq
    t2 = t * t
    eta = sq + np.log(z / (1.0 + sq))
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0
    u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 ** 2 - 425425.0 * t2 ** 3) / 414720.0
    series = 1.0 - u1 / nu + u2 / nu ** 2 - u3 / nu ** 3
    return 0.5 * math.log(math.pi / (2.0 * nu)) - nu * eta - 0.5 * np.log(sq) + np.log(series)


def _rule_sum(f: Integrand, nodes: int, shape: float) -> np.ndarray:
    z, w = NumericsService.quadrature_nodes(nodes, shape)
    values = np.asarray(f(z), dtype=float)
    return np.tensordot(w, values, axes=(0, 0))


def _log_weight_limits(shape: float, depth: float = 45.0) -> Tuple[float, float]:
    """Interval in t = log z outside which the Gamma weight is below e^-depth"""
    def g(d):
        return shape * (d - math.expm1(d)) + depth

    lo = -(depth / shape + 2.0)
    hi = math.log(depth / shape + 2.0) + 2.0
    return (
        math.log(shape) + optimize.brentq(g, lo, 0.0),
        math.log(shape) + optimize.brentq(g, 0.0, hi),
    )


@lru_cache(maxsize=8)
def _legendre_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _panel_integrals(g: Callable, near: np.ndarray, far: np.ndarray, order: int) -> np.ndarray:
    """Integral of g over each [near_k, far_k] on geometrically growing Gauss-Legendre panels"""
    if near.size == 0:
        return np.zeros(0)
    s_near, s_far = np.log1p(near), np.log1p(far)
    counts = np.maximum(1, np.ceil((s_far - s_near) / math.log(PANEL_GROWTH)).astype(np.int64))
    gap = np.repeat(np.arange(near.size), counts)
    step = np.repeat((s_far - s_near) / counts, counts)
    k = np.arange(gap.size) - np.repeat(np.cumsum(counts) - counts, counts)
    lo = np.expm1(s_near[gap] + k * step)
    hi = np.where(k == counts[gap] - 1, far[gap], np.expm1(s_near[gap] + (k + 1) * step))
    lo = np.where(k == 0, near[gap], lo)

    xi, w = _legendre_rule(order)
    half = 0.5 * (hi - lo)
    points = 0.5 * (hi + lo)[:, None] + half[:, None] * xi[None, :]
    values = np.asarray(g(points.ravel()), dtype=float).reshape(points.shape)
    panels = half * (values @ w)
    return np.bincount(gap, weights=panels, minlength=near.size)


def _tail_masses(pdf: Callable, distance: np.ndarray, pivot: float, sign: float, rel_tol: float) -> np.ndarray:
    """
    Mass of the density beyond each distance from the pivot on one side

    The outermost point is anchored by adaptive quadrature to infinity and
    the gaps between sorted points are summed inward, so every result is a
    sum of positive terms and keeps its relative accuracy.
    """
    values, inverse = np.unique(distance, return_inverse=True)
    values = values[::-1]

    def g(s):
        return np.asarray(pdf(pivot + sign * np.asarray(s, dtype=float)), dtype=float)

    anchor, _ = integrate.quad(
        lambda s: float(g(np.array([s]))[0]), values[0], np.inf, epsabs=0.0, epsrel=rel_tol, limit=500
    )
    gaps = _panel_integrals(g, values[1:], values[:-1], PANEL_ORDER)
    masses = anchor + np.concatenate(([0.0], np.cumsum(gaps)))
    return masses[::-1][np.ravel(inverse)]


def _scalar(F: Callable, x: float) -> float:
    return float(np.asarray(F(x), dtype=float).reshape(-1)[0])


class NumericsService:
    """Special functions, Gamma-weighted quadrature and CDF inversion"""

    @staticmethod
    def default_quadrature() -> QuadratureSpec:
        """Quadrature spec from application settings"""
        return QuadratureSpec(
            nodes=settings.quadrature_nodes,
            rel_tol=settings.quadrature_rel_tol,
        )

    @staticmethod
    def bessel_k(order: float, x: ArrayLike) -> ArrayLike:
        """
        Modified Bessel function of the second kind K_order(x)

        Args:
            order: Real order; K is even in the order
            x: Positive argument(s)

        Returns:
            K_order(x), same shape as x
        """
        x = np.asarray(x, dtype=float)
        if np.any(~(x > 0.0)):
            raise DomainError("bessel_k requires x > 0")
        result = special.kv(abs(order), x)
        return result if result.ndim else float(result)

    @staticmethod
    def log_bessel_k(order: float, x: ArrayLike) -> ArrayLike:
        """
        Logarithm of K_order(x), finite where K itself over- or underflows

        Uses the exponentially scaled kve, the small-argument limit where kve
        overflows, and the uniform expansion for orders above DEBYE_MIN_ORDER.
        """
        x_in = np.asarray(x, dtype=float)
        if np.any(~(x_in > 0.0)):
            raise DomainError("log_bessel_k requires x > 0")
        x = np.atleast_1d(x_in)
        nu = abs(float(order))
        if nu > DEBYE_MIN_ORDER:
            result = _log_bessel_k_debye(nu, x)
            return result.reshape(x_in.shape) if x_in.ndim else float(result[0])

        with np.errstate(over="ignore", divide="ignore"):
            scaled = special.kve(nu, x)
            result = np.log(scaled) - x
        overflow = ~np.isfinite(result)
        if np.any(overflow):
            if nu == 0.0:
                # K_0(x) ~ -log(x/2) - euler_gamma
                small = np.log(-np.log(x[overflow] / 2.0) - np.euler_gamma)
            else:
                small = special.gammaln(nu) + (nu - 1.0) * math.log(2.0) - nu * np.log(x[overflow])
            result[overflow] = small
        return result.reshape(x_in.shape) if x_in.ndim else float(result[0])

    @staticmethod
    def log_bessel_mixture(a: float, b: ArrayLike) -> ArrayLike:
        """
        log of the integral over z > 0 of z^(a-1) exp(-z - b/z)

        Equals log 2 + (a/2) log b + log K_a(2 sqrt(b)); for b -> 0 the limit
        is log Gamma(a) when a > 0 and +inf otherwise.
        """
        b_in = np.asarray(b, dtype=float)
        b = np.atleast_1d(b_in)
        if np.any(b < 0.0):
            raise DomainError("log_bessel_mixture requires b >= 0")
        out = np.empty_like(b)
        zero = b == 0.0
        if np.any(zero):
            out[zero] = special.gammaln(a) if a > 0.0 else np.inf
        pos = ~zero
        if np.any(pos):
            bp = b[pos]
            out[pos] = math.log(2.0) + 0.5 * a * np.log(bp) + NumericsService.log_bessel_k(a, 2.0 * np.sqrt(bp))
        return out.reshape(b_in.shape) if b_in.ndim else float(out[0])

    @staticmethod
    def std_normal_cdf(x: ArrayLike) -> ArrayLike:
        """Standard normal cumulative distribution function"""
        return special.ndtr(x)

    @staticmethod
    def std_normal_quantile(p: ArrayLike) -> ArrayLike:
        """Inverse of the standard normal CDF for p in (0, 1)"""
        p_arr = np.asarray(p, dtype=float)
        if np.any(~((p_arr > 0.0) & (p_arr < 1.0))):
            raise DomainError("std_normal_quantile requires p strictly inside (0, 1)")
        return special.ndtri(p)

    @staticmethod
    @lru_cache(maxsize=128)
    def quadrature_nodes(nodes: int, shape: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Generalized Gauss-Laguerre nodes and normalized weights

        Weight function z^(shape-1) e^(-z) / Gamma(shape); nodes are the
        eigenvalues of the Jacobi matrix, weights the squared first components
        of its eigenvectors.

        Args:
            nodes: Number of nodes
            shape: Gamma shape parameter (> 0)

        Returns:
            Tuple of (nodes, weights), weights summing to one
        """
        if shape <= 0.0:
            raise DomainError(f"quadrature shape must be positive, got {shape}")
        alpha = shape - 1.0
        k = np.arange(nodes, dtype=float)
        diagonal = 2.0 * k + alpha + 1.0
        off_diagonal = np.sqrt(k[1:] * (k[1:] + alpha))
        z, vectors = eigh_tridiagonal(diagonal, off_diagonal)
        weights = vectors[0, :] ** 2
        weights = weights / weights.sum()
        z.setflags(write=False)
        weights.setflags(write=False)
        return z, weights

    @staticmethod
    def dump_nodes(path: Path, nodes: int, shape: float) -> Path:
        """Write a quadrature rule as CSV (debug aid)"""
        z, w = NumericsService.quadrature_nodes(nodes, float(shape))
        pd.DataFrame({"node": z, "weight": w}).to_csv(path, index=False, float_format="%.17g")
        logger.debug(f"Wrote {nodes} quadrature nodes for shape {shape} to {path}")
        return path

    @staticmethod
    def adaptive_gamma_expectation(f: Integrand, shape: float, rel_tol: float = 1e-9) -> np.ndarray:
        """
        E[f(Z)] for Z ~ Gamma(shape, 1) by adaptive quadrature in t = log z

        The substitution turns the weight into exp(shape t - e^t), smooth and
        bounded, which removes the z -> 0 singularity for shape < 1.
        """
        t_lo, t_hi = _log_weight_limits(shape)
        log_norm = special.gammaln(shape)

        def integrand(t):
            z = math.exp(t)
            weight = math.exp(shape * t - z - log_norm)
            return weight * np.asarray(f(np.array([z])), dtype=float)[0]

        result, error = integrate.quad_vec(integrand, t_lo, t_hi, epsrel=rel_tol, epsabs=0.0, norm="max", limit=2000)
        logger.debug(f"Adaptive quadrature shape={shape:.4g}: error estimate {np.max(np.abs(error)):.3g}")
        return np.asarray(result, dtype=float)

    @staticmethod
    def gamma_expectation(f: Integrand, shape: float, spec: Optional[QuadratureSpec] = None) -> np.ndarray:
        """
        E[f(Z)] for Z ~ Gamma(shape, 1)

        Args:
            f: Vectorized integrand; maps node array (n,) to values (n, ...)
            shape: Gamma shape (> 0)
            spec: Quadrature scheme and tolerance

        Returns:
            Expectation with the trailing shape of f's output
        """
        spec = spec or NumericsService.default_quadrature()
        if shape <= 0.0:
            raise DomainError(f"quadrature shape must be positive, got {shape}")
        if spec.scheme == QuadratureScheme.ADAPTIVE:
            return NumericsService.adaptive_gamma_expectation(f, shape, spec.rel_tol)

        nodes = spec.nodes
        estimate = _rule_sum(f, nodes, shape)
        while nodes < settings.max_quadrature_nodes:
            nodes *= 2
            refined = _rule_sum(f, nodes, shape)
            # Per element, so small tail values converge to relative accuracy too
            change = np.abs(refined - estimate)
            if np.all(np.isfinite(change)) and np.all(change <= spec.rel_tol * np.abs(refined) + TINY):
                if nodes > 2 * spec.nodes:
                    logger.debug(f"Gauss-Laguerre shape={shape:.4g} converged with {nodes} nodes")
                return refined
            estimate = refined
        raise QuadratureAccuracyError(
            f"Gauss-Laguerre quadrature for shape {shape:.4g} did not reach "
            f"rel_tol {spec.rel_tol:g} with {nodes} nodes",
            best_estimate=estimate,
        )

    @staticmethod
    def robust_gamma_expectation(f: Integrand, shape: float, spec: Optional[QuadratureSpec] = None) -> np.ndarray:
        """gamma_expectation that falls back to the adaptive scheme on non-convergence"""
        spec = spec or NumericsService.default_quadrature()
        try:
            return NumericsService.gamma_expectation(f, shape, spec)
        except QuadratureAccuracyError as e:
            logger.warning(f"{e}; falling back to adaptive quadrature")
            return NumericsService.adaptive_gamma_expectation(f, shape, spec.rel_tol)

    @staticmethod
    def weighted_exp_integral(f: Integrand, shape: float, spec: Optional[QuadratureSpec] = None) -> np.ndarray:
        """
        Integral over z > 0 of z^(shape-1) e^(-z) f(z)

        Args:
            f: Vectorized integrand with at most polynomial growth
            shape: Exponent parameter (> 0), N/2 for the K-distribution
            spec: Quadrature scheme and tolerance

        Returns:
            Integral value(s)
        """
        expectation = NumericsService.gamma_expectation(f, shape, spec)
        return math.exp(special.gammaln(shape)) * expectation

    @staticmethod
    def adaptive_exp_integral(f: Integrand, shape: float, rel_tol: float = 1e-9) -> np.ndarray:
        """weighted_exp_integral by the adaptive scheme, used as a cross-check"""
        if shape <= 0.0:
            raise DomainError(f"quadrature shape must be positive, got {shape}")
        return math.exp(special.gammaln(shape)) * NumericsService.adaptive_gamma_expectation(f, shape, rel_tol)

    @staticmethod
    def cdf_from_pdf(pdf: Callable, x: ArrayLike, pivot: float = 0.0, rel_tol: float = 1e-11) -> ArrayLike:
        """
        CDF of a vectorized density by integration from the nearer infinity

        Points at or below the pivot take the lower tail mass, points above it
        one minus the upper tail mass, so probabilities far in either tail are
        accurate in relative terms.

        Args:
            pdf: Vectorized normalized density
            x: Abscissa(e)
            pivot: Split point, near the median
            rel_tol: Relative tolerance of the tail anchors

        Returns:
            CDF value(s), same shape as x
        """
        x_in = np.asarray(x, dtype=float)
        flat = x_in.ravel()
        if not np.all(np.isfinite(flat)):
            raise DomainError("cdf_from_pdf requires finite abscissae")
        out = np.empty_like(flat)
        lower = flat <= pivot
        if np.any(lower):
            out[lower] = _tail_masses(pdf, pivot - flat[lower], pivot, -1.0, rel_tol)
        if np.any(~lower):
            out[~lower] = 1.0 - _tail_masses(pdf, flat[~lower] - pivot, pivot, 1.0, rel_tol)
        return out.reshape(x_in.shape) if x_in.ndim else float(out[0])

    @staticmethod
    def invert_monotone_cdf(
        F: Callable,
        p: float,
        bracket: Optional[Tuple[float, float]] = None,
        max_expansions: int = 200,
    ) -> float:
        """
        Solve F(x) = p for a strictly increasing F

        Args:
            F: Monotone CDF
            p: Probability in (0, 1)
            bracket: Optional starting interval, expanded as needed

        Returns:
            x with |F(x) - p| <= 1e-10
        """
        if not 0.0 < p < 1.0:
            raise DomainError(f"probability must lie strictly inside (0, 1), got {p}")
        a, b = bracket if bracket is not None else (-1.0, 1.0)
        Fa, Fb = _scalar(F, a), _scalar(F, b)
        width = max(b - a, 1e-3)
        for _ in range(max_expansions):
            if Fa <= p <= Fb:
                break
            if Fa > p:
                b, Fb = a, Fa
                a -= width
                Fa = _scalar(F, a)
            else:
                a, Fa = b, Fb
                b += width
                Fb = _scalar(F, b)
            width *= 2.0
        else:
            raise QuantileRangeError(f"probability {p} outside the range achieved by the CDF")
        if Fa == p:
            return a
        if Fb == p:
            return b
        return optimize.brentq(
            lambda x: _scalar(F, x) - p, a, b, xtol=1e-14, rtol=4.0 * np.finfo(float).eps, maxiter=300
        )

    @staticmethod
    def build_quantile_table(
        F: Callable,
        span: Optional[Tuple[float, float]] = None,
        points: Optional[int] = None,
        tail: Optional[float] = None,
    ) -> TabulatedQuantile:
        """
        Tabulate a vectorized CDF on an even grid covering [tail, 1 - tail]

        Args:
            F: Vectorized strictly increasing CDF
            span: Optional explicit abscissa range
            points: Grid size
            tail: Smallest probability the table must cover

        Returns:
            TabulatedQuantile
        """
        points = points or settings.quantile_table_points
        tail = tail or settings.quantile_tail
        if span is None:
            x_lo = NumericsService.invert_monotone_cdf(F, tail)
            x_hi = NumericsService.invert_monotone_cdf(F, 1.0 - tail, bracket=(x_lo, -x_lo if x_lo < 0 else x_lo + 1.0))
            margin = 0.01 * (x_hi - x_lo)
            span = (x_lo - margin, x_hi + margin)
        grid_x = np.linspace(span[0], span[1], points)
        grid_F = np.asarray(F(grid_x), dtype=float)
        keep = (grid_F > 0.0) & (grid_F < 1.0)
        grid_x, grid_F = grid_x[keep], grid_F[keep]
        increasing = np.concatenate(([True], np.diff(grid_F) > 0.0))
        grid_x, grid_F = grid_x[increasing], grid_F[increasing]
        if grid_F[0] > tail or grid_F[-1] < 1.0 - tail:
            raise QuantileRangeError(
                f"quantile table covers [{grid_F[0]:.3g}, {grid_F[-1]:.3g}], need [{tail:g}, {1 - tail:g}]"
            )
        logger.debug(f"Built quantile table with {len(grid_x)} points on [{grid_x[0]:.4g}, {grid_x[-1]:.4g}]")
        return TabulatedQuantile(grid_x=grid_x, grid_F=grid_F)

    @staticmethod
    def tabulated_quantile(table: TabulatedQuantile, F: Callable, p: ArrayLike) -> np.ndarray:
        """
        Quantiles bracketed by the table and refined on F

        Probabilities outside the tabulated range fall back to direct inversion.
        """
        p_arr = np.atleast_1d(np.asarray(p, dtype=float))
        lo, hi = table.p_range
        out = np.empty_like(p_arr)
        for i, pi in enumerate(p_arr.flat):
            if lo <= pi <= hi:
                a, b = table.bracket(pi)
                out.flat[i] = NumericsService.invert_monotone_cdf(F, pi, bracket=(a, b))
            else:
                out.flat[i] = NumericsService.invert_monotone_cdf(F, pi, bracket=(table.grid_x[0], table.grid_x[-1]))
        return out.reshape(np.shape(p))
