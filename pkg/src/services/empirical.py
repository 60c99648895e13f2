"""
Empirical copula service: rank transforms, copula histograms and tail asymmetries
"""

import math
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.stats import rankdata

from ..config import TAIL_CORNER, settings
from ..exceptions import (
    DegenerateSeriesError,
    InsufficientDataError,
    ParameterError,
)
from ..models import (
    AsymmetryReport,
    CopulaGrid,
    CopulaHistogram,
    CorrelationSet,
    ReturnMatrix,
    TailAsymmetry,
    UniformSeries,
    ValueHistogram,
)


def _check_bins(bins: int) -> None:
    if bins < 2:
        raise ParameterError(f"bins must be at least 2, got {bins}")


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, UniformSeries) else np.asarray(u, dtype=float)


def _bin_matrix(matrix: ReturnMatrix, bins: int) -> np.ndarray:
    """Bin indices of the rank-transformed columns"""
    for k, ticker in enumerate(matrix.tickers):
        if np.ptp(matrix.values[:, k]) == 0.0:
            raise DegenerateSeriesError(f"column {ticker} is constant", column=ticker)
    columns = [EmpiricalCopulaService.to_uniform(matrix.column(k)).values for k in range(matrix.n_assets)]
    return np.column_stack([EmpiricalCopulaService.bin_index(u, bins) for u in columns])


def _corner_asymmetry(mass: np.ndarray, bins: int) -> TailAsymmetry:
    m = int(round(TAIL_CORNER * bins))

    def corner(block: np.ndarray) -> float:
        return min(1.0, max(0.0, math.fsum(block.ravel())))

    return TailAsymmetry(
        lower_lower=corner(mass[:m, :m]),
        upper_upper=corner(mass[-m:, -m:]),
        lower_upper=corner(mass[:m, -m:]),
        upper_lower=corner(mass[-m:, :m]),
    )


def _check_corner_alignment(bins: int) -> None:
    if bins % 5 != 0:
        raise ParameterError(
            f"tail asymmetry needs the number of bins divisible by 5 so the 0.2 corners align, got {bins}"
        )


class EmpiricalCopulaService:
    """Empirical copula histograms, tail asymmetries and correlation histograms"""

    @staticmethod
    def to_uniform(r: Union[Sequence[float], np.ndarray]) -> UniformSeries:
        """
        Empirical distribution transform u(t) = #{r(tau) <= r(t)}/T - 1/(2T)

        Ties share the same value.
        """
        r = np.asarray(r, dtype=float)
        if r.ndim != 1 or len(r) == 0:
            raise InsufficientDataError("to_uniform needs a non-empty return column")
        T = len(r)
        counts = rankdata(r, method="max")
        return UniformSeries(values=counts / T - 0.5 / T)

    @staticmethod
    def bin_index(u: np.ndarray, bins: int) -> np.ndarray:
        """Half-open bin [(i-1)/B, i/B) of each value, the last bin closed"""
        idx = np.floor(np.round(np.asarray(u, dtype=float) * bins, 9)).astype(np.int64)
        return np.clip(idx, 0, bins - 1)

    @staticmethod
    def cell_counts(u, v, bins: int) -> np.ndarray:
        """Integer B x B counts of (u, v) pairs; row i is the u-bin"""
        u, v = _values(u), _values(v)
        if u.shape != v.shape:
            raise ParameterError(f"uniform series differ in length: {len(u)} vs {len(v)}")
        _check_bins(bins)
        codes = EmpiricalCopulaService.bin_index(u, bins) * bins + EmpiricalCopulaService.bin_index(v, bins)
        return np.bincount(codes, minlength=bins * bins).reshape(bins, bins)

    @staticmethod
    def pairwise_copula(u, v, bins: Optional[int] = None) -> CopulaHistogram:
        """
        Empirical copula density of one pair

        Args:
            u, v: Uniform series of equal length
            bins: Bins per axis

        Returns:
            CopulaHistogram with density count / (T (1/B)^2)
        """
        bins = settings.default_bins if bins is None else bins
        counts = EmpiricalCopulaService.cell_counts(u, v, bins)
        T = int(counts.sum())
        return CopulaHistogram(bins=bins, density=counts / T * bins ** 2, sample_count=T)

    @staticmethod
    def pair_counts(matrix: ReturnMatrix, bins: Optional[int] = None) -> Iterator[Tuple[int, int, np.ndarray]]:
        """
        Stream integer cell counts of every pair k < l

        Yields:
            (k, l, counts) with zero-based column indices
        """
        bins = settings.default_bins if bins is None else bins
        _check_bins(bins)
        if matrix.n_assets < 2:
            raise InsufficientDataError(f"need at least 2 columns, got {matrix.n_assets}")
        idx = _bin_matrix(matrix, bins)
        cells = bins * bins
        for k in range(matrix.n_assets - 1):
            rest = idx[:, k + 1:]
            offsets = np.arange(rest.shape[1]) * cells
            codes = (idx[:, k, None] * bins + rest + offsets).ravel()
            block = np.bincount(codes, minlength=rest.shape[1] * cells).reshape(-1, bins, bins)
            for j, counts in enumerate(block):
                yield k, k + 1 + j, counts

    @staticmethod
    def averaged_copula(matrix: ReturnMatrix, bins: Optional[int] = None) -> CopulaHistogram:
        """
        Empirical copula density averaged over all K(K-1)/2 pairs

        Integer counts are accumulated exactly, so the result does not depend
        on the order in which pairs are visited.
        """
        bins = settings.default_bins if bins is None else bins
        total = np.zeros((bins, bins), dtype=np.int64)
        pairs = 0
        for _, _, counts in EmpiricalCopulaService.pair_counts(matrix, bins):
            total += counts
            pairs += 1
        T = matrix.n_obs
        logger.info(f"Averaged copula over {pairs} pairs, {T} observations, {bins} bins")
        return CopulaHistogram(
            bins=bins,
            density=total / (pairs * T) * bins ** 2,
            sample_count=T,
            pair_count=pairs,
            kind="averaged",
        )

    @staticmethod
    def tail_asymmetry(hist: Union[CopulaHistogram, CopulaGrid]) -> TailAsymmetry:
        """
        Corner masses and tail dependence asymmetries of a binned copula

        p = UU - LL and q = LU - UL where LU has u low and v high.
        Corner sums are exactly rounded, so symmetric inputs give exact zeros.
        """
        _check_corner_alignment(hist.bins)
        return _corner_asymmetry(hist.density / hist.bins ** 2, hist.bins)

    @staticmethod
    def value_histogram(
        values: Union[Sequence[float], np.ndarray],
        bin_width: float,
        low: float = -1.0,
        high: float = 1.0,
    ) -> ValueHistogram:
        """Fixed-width histogram of values in [low, high], edge values clipped inward"""
        if not bin_width > 0.0:
            raise ParameterError(f"bin width must be positive, got {bin_width}")
        values = np.asarray(values, dtype=float)
        n = max(1, int(round((high - low) / bin_width)))
        idx = np.clip(np.floor((values - low) / bin_width + 1e-9).astype(np.int64), 0, n - 1)
        counts = np.bincount(idx, minlength=n)
        centers = low + (np.arange(n) + 0.5) * bin_width
        return ValueHistogram(bin_width=bin_width, centers=centers, counts=counts)

    @staticmethod
    def asymmetry_histograms(
        matrix: ReturnMatrix,
        bins: Optional[int] = None,
        bin_width: Optional[float] = None,
    ) -> AsymmetryReport:
        """
        Tail dependence asymmetries p and q of every pair and their histograms

        Args:
            matrix: Return matrix with K >= 2
            bins: Copula histogram bins per axis (divisible by 5)
            bin_width: Width of the p and q histogram bins

        Returns:
            AsymmetryReport
        """
        bins = settings.default_bins if bins is None else bins
        bin_width = settings.asymmetry_bin_width if bin_width is None else bin_width
        _check_corner_alignment(bins)
        T = matrix.n_obs
        ticker_k, ticker_l, p, q = [], [], [], []
        for k, l, counts in EmpiricalCopulaService.pair_counts(matrix, bins):
            tails = _corner_asymmetry(counts / T, bins)
            ticker_k.append(matrix.tickers[k])
            ticker_l.append(matrix.tickers[l])
            p.append(tails.p)
            q.append(tails.q)

        report = AsymmetryReport(
            ticker_k=ticker_k,
            ticker_l=ticker_l,
            p=p,
            q=q,
            hist_p=EmpiricalCopulaService.value_histogram(p, bin_width),
            hist_q=EmpiricalCopulaService.value_histogram(q, bin_width),
        )
        summary = report.summary()
        logger.info(
            f"Tail asymmetry over {report.n_pairs} pairs: "
            f"mean p {summary['p_mean']:.4f} +- {summary['p_sem']:.4f}, "
            f"mean q {summary['q_mean']:.4f} +- {summary['q_sem']:.4f}"
        )
        return report

    @staticmethod
    def correlation_histogram(corrs: CorrelationSet, bin_width: Optional[float] = None) -> ValueHistogram:
        """Relative frequency of pair correlations over bins of width bin_width on [-1, 1]"""
        bin_width = settings.correlation_bin_width if bin_width is None else bin_width
        if len(corrs) == 0:
            raise InsufficientDataError("correlation histogram needs at least one pair")
        return EmpiricalCopulaService.value_histogram(corrs.values, bin_width)
