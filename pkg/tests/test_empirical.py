"""
Tests for rank transforms, copula histograms and tail asymmetries
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from src.exceptions import DegenerateSeriesError, InsufficientDataError, ParameterError
from src.models import CopulaHistogram, CorrelationSet, ReturnMatrix
from src.services import EmpiricalCopulaService


class TestToUniform:
    """Test the empirical distribution transform"""

    def test_reference(self):
        """Test (3, 1, 2, 4)"""
        u = EmpiricalCopulaService.to_uniform([3.0, 1.0, 2.0, 4.0])
        np.testing.assert_allclose(u.values, [0.625, 0.125, 0.375, 0.875], atol=1e-15)

    def test_ties(self):
        """Test ties share the count of values <= r"""
        u = EmpiricalCopulaService.to_uniform([1.0, 1.0, 2.0])
        np.testing.assert_allclose(u.values, [0.5, 0.5, 5.0 / 6.0], atol=1e-15)

    def test_increasing(self):
        """Test ranks equal positions for increasing input"""
        T = 37
        u = EmpiricalCopulaService.to_uniform(np.linspace(-1.0, 1.0, T))
        np.testing.assert_allclose(u.values, (np.arange(1, T + 1) - 0.5) / T, atol=1e-12)

    def test_empty(self):
        """Test empty input"""
        with pytest.raises(InsufficientDataError):
            EmpiricalCopulaService.to_uniform([])

    @given(st.lists(st.integers(min_value=-1000, max_value=1000), min_size=1, max_size=60))
    @hyp_settings(max_examples=50, deadline=None)
    def test_rank_invariance(self, r):
        """Test strictly increasing transforms leave u unchanged"""
        r = np.asarray(r, dtype=float)
        shifted = EmpiricalCopulaService.to_uniform(np.exp(r / 100.0) + r)
        assert np.array_equal(shifted.values, EmpiricalCopulaService.to_uniform(r).values)


class TestPairwiseCopula:
    """Test single-pair copula histograms"""

    def test_comonotone(self):
        """Test u = v puts all mass on the diagonal"""
        u = EmpiricalCopulaService.to_uniform(np.arange(10.0))
        hist = EmpiricalCopulaService.pairwise_copula(u, u, bins=2)

        assert hist.density.tolist() == [[2.0, 0.0], [0.0, 2.0]]

    def test_antimonotone(self):
        """Test v = 1 - u puts all mass on the anti-diagonal"""
        u = EmpiricalCopulaService.to_uniform(np.arange(10.0))
        v = EmpiricalCopulaService.to_uniform(-np.arange(10.0))
        hist = EmpiricalCopulaService.pairwise_copula(u, v, bins=2)

        assert hist.density.tolist() == [[0.0, 2.0], [2.0, 0.0]]

    def test_length_mismatch(self):
        """Test unequal lengths"""
        with pytest.raises(ParameterError):
            EmpiricalCopulaService.pairwise_copula(
                EmpiricalCopulaService.to_uniform([1.0, 2.0]), EmpiricalCopulaService.to_uniform([1.0, 2.0, 3.0])
            )

    def test_marginal_uniformity(self, rng):
        """Test row and column masses equal 1/B when B divides T"""
        x = rng.standard_normal(2000)
        y = 0.5 * x + rng.standard_normal(2000)
        u, v = EmpiricalCopulaService.to_uniform(x), EmpiricalCopulaService.to_uniform(y)
        hist = EmpiricalCopulaService.pairwise_copula(u, v, bins=20)

        np.testing.assert_allclose(hist.cell_mass.sum(axis=1), 1.0 / 20, atol=1e-9)
        np.testing.assert_allclose(hist.cell_mass.sum(axis=0), 1.0 / 20, atol=1e-9)
        assert hist.cell_mass.sum() == pytest.approx(1.0, abs=1e-9)

    def test_exchange_symmetry(self, rng):
        """Test swapping arguments transposes the histogram exactly"""
        x, y = rng.standard_normal(500), rng.standard_normal(500)
        u, v = EmpiricalCopulaService.to_uniform(x), EmpiricalCopulaService.to_uniform(y)

        transposed = EmpiricalCopulaService.pairwise_copula(v, u).density.T
        assert np.array_equal(EmpiricalCopulaService.pairwise_copula(u, v).density, transposed)

    @pytest.mark.slow
    def test_independent_flat(self, rng):
        """Test independent uniforms give a flat histogram within Monte Carlo error"""
        T, bins = 10 ** 6, 20
        hist = EmpiricalCopulaService.pairwise_copula(rng.uniform(size=T), rng.uniform(size=T), bins=bins)
        # cell density is count * B^2 / T with count ~ Binomial(T, 1/B^2)
        se = math.sqrt(bins ** 2 / T)

        np.testing.assert_allclose(hist.density, 1.0, atol=5.0 * se)
        assert hist.density.std() < 1.5 * se

    def test_bin_edges(self):
        """Test half-open bins with the last edge closed"""
        u = np.array([0.0, 0.25, 0.4999999, 0.5, 1.0])
        assert EmpiricalCopulaService.bin_index(u, 2).tolist() == [0, 0, 0, 1, 1]


class TestAveragedCopula:
    """Test the pair-averaged copula histogram"""

    def test_two_columns_equal_pairwise(self, rng):
        """Test K = 2 reproduces the single pair"""
        values = rng.standard_normal((400, 2))
        matrix = ReturnMatrix(values=values, tickers=["A", "B"])
        averaged = EmpiricalCopulaService.averaged_copula(matrix, bins=10)
        u = EmpiricalCopulaService.to_uniform(values[:, 0])
        v = EmpiricalCopulaService.to_uniform(values[:, 1])
        single = EmpiricalCopulaService.pairwise_copula(u, v, bins=10)

        assert np.array_equal(averaged.density, single.density)
        assert averaged.pair_count == 1

    def test_identical_columns(self):
        """Test identical columns give the diagonal histogram"""
        col = np.arange(20.0)
        matrix = ReturnMatrix(values=np.column_stack([col, col, col]), tickers=["A", "B", "C"])
        hist = EmpiricalCopulaService.averaged_copula(matrix, bins=4)

        assert hist.pair_count == 3
        np.testing.assert_array_equal(hist.density, 4.0 * np.eye(4))

    def test_normalization(self, gaussian_returns):
        """Test averaged density integrates to one"""
        hist = EmpiricalCopulaService.averaged_copula(gaussian_returns, bins=20)
        assert hist.cell_mass.sum() == pytest.approx(1.0, abs=1e-9)

    def test_order_independent(self, gaussian_returns):
        """Test column order does not change the averaged histogram"""
        reordered = ReturnMatrix(values=gaussian_returns.values[:, ::-1], tickers=["D", "C", "B", "A"])
        a = EmpiricalCopulaService.averaged_copula(gaussian_returns, bins=20).density
        b = EmpiricalCopulaService.averaged_copula(reordered, bins=20).density

        np.testing.assert_allclose(a, b.T, atol=1e-12)

    def test_pair_counts_stream(self, gaussian_returns):
        """Test every unordered pair is visited once"""
        pairs = [(k, l) for k, l, _ in EmpiricalCopulaService.pair_counts(gaussian_returns, bins=10)]
        assert pairs == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

    def test_degenerate_column(self):
        """Test constant columns are rejected"""
        matrix = ReturnMatrix(values=[[0.1, 1.0], [0.2, 1.0], [0.3, 1.0]], tickers=["A", "B"])
        with pytest.raises(DegenerateSeriesError):
            EmpiricalCopulaService.averaged_copula(matrix)

    def test_single_column(self):
        """Test K = 1 is insufficient"""
        with pytest.raises(InsufficientDataError):
            EmpiricalCopulaService.averaged_copula(ReturnMatrix(values=[[0.1], [0.2]], tickers=["A"]))


class TestTailAsymmetry:
    """Test corner masses and asymmetries"""

    def test_comonotone(self):
        """Test the comonotone histogram has p = q = 0"""
        u = EmpiricalCopulaService.to_uniform(np.arange(100.0))
        tails = EmpiricalCopulaService.tail_asymmetry(EmpiricalCopulaService.pairwise_copula(u, u, bins=20))

        assert tails.lower_lower == pytest.approx(0.2)
        assert tails.upper_upper == pytest.approx(0.2)
        assert tails.p == 0.0
        assert tails.q == 0.0

    def test_symmetric_histograms(self, rng):
        """Test exact zeros under transpose and rotation symmetry"""
        raw = rng.uniform(size=(20, 20))
        symmetric = raw + raw.T
        symmetric = symmetric + symmetric[::-1, ::-1]
        density = symmetric / symmetric.sum() * 400
        hist = CopulaHistogram(bins=20, density=density, sample_count=1000)
        tails = EmpiricalCopulaService.tail_asymmetry(hist)

        assert tails.p == 0.0
        assert tails.q == 0.0

    def test_orientation(self):
        """Test q = LU - UL with LU at low u and high v"""
        density = np.zeros((5, 5))
        density[0, 4] = 25.0
        tails = EmpiricalCopulaService.tail_asymmetry(CopulaHistogram(bins=5, density=density, sample_count=1))

        assert tails.lower_upper == pytest.approx(1.0)
        assert tails.q == pytest.approx(1.0)
        assert tails.p == 0.0

    def test_misaligned_bins(self):
        """Test B must be divisible by 5"""
        hist = CopulaHistogram(bins=7, density=np.ones((7, 7)), sample_count=49)
        with pytest.raises(ParameterError, match="divisible by 5"):
            EmpiricalCopulaService.tail_asymmetry(hist)


class TestAsymmetryHistograms:
    """Test per-pair asymmetry statistics"""

    def test_two_columns(self, rng):
        """Test K = 2 gives single-entry histograms"""
        matrix = ReturnMatrix(values=rng.standard_normal((500, 2)), tickers=["A", "B"])
        report = EmpiricalCopulaService.asymmetry_histograms(matrix)

        assert report.n_pairs == 1
        assert report.hist_p.total == 1
        assert report.hist_q.total == 1
        assert (report.ticker_k, report.ticker_l) == (["A"], ["B"])

    def test_identical_columns(self):
        """Test identical columns have p = q = 0"""
        col = np.sin(np.arange(200.0))
        matrix = ReturnMatrix(values=np.column_stack([col, col, col]), tickers=["A", "B", "C"])
        report = EmpiricalCopulaService.asymmetry_histograms(matrix)

        assert np.all(report.p == 0.0)
        assert np.all(report.q == 0.0)

    def test_gaussian_symmetry(self, gaussian_returns):
        """Test Gaussian columns have mean p and q near zero"""
        summary = EmpiricalCopulaService.asymmetry_histograms(gaussian_returns).summary()

        assert abs(summary["p_mean"]) < 4 * summary["p_sem"] + 0.01
        assert abs(summary["q_mean"]) < 4 * summary["q_sem"] + 0.01

    def test_matches_tail_asymmetry(self, gaussian_returns):
        """Test streamed corner sums equal the histogram route"""
        report = EmpiricalCopulaService.asymmetry_histograms(gaussian_returns)
        u = EmpiricalCopulaService.to_uniform(gaussian_returns.column(0))
        v = EmpiricalCopulaService.to_uniform(gaussian_returns.column(1))
        tails = EmpiricalCopulaService.tail_asymmetry(EmpiricalCopulaService.pairwise_copula(u, v))

        assert report.p[0] == pytest.approx(tails.p, abs=1e-15)
        assert report.q[0] == pytest.approx(tails.q, abs=1e-15)

    def test_misaligned(self, gaussian_returns):
        """Test misaligned bins"""
        with pytest.raises(ParameterError):
            EmpiricalCopulaService.asymmetry_histograms(gaussian_returns, bins=12)


class TestCorrelationHistogram:
    """Test correlation histograms"""

    def _corrs(self, values):
        n = 2
        while n * (n - 1) // 2 < len(values):
            n += 1
        k, l = np.triu_indices(n, k=1)
        return CorrelationSet(tickers=[f"T{i}" for i in range(n)], index_k=k, index_l=l, values=values)

    def test_single_pair(self):
        """Test one pair fills one bin"""
        hist = EmpiricalCopulaService.correlation_histogram(self._corrs([0.37]))

        assert hist.weights.max() == 1.0
        assert hist.centers[np.argmax(hist.counts)] == pytest.approx(0.37, abs=0.01)

    def test_counting(self):
        """Test {0.4, 0.4, 0.6} gives weights 2/3 and 1/3"""
        hist = EmpiricalCopulaService.correlation_histogram(self._corrs([0.40, 0.40, 0.60]))
        occupied = hist.weights[hist.counts > 0]

        np.testing.assert_allclose(occupied, [2.0 / 3.0, 1.0 / 3.0])
        assert hist.weights.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(hist.centers[hist.counts > 0], [0.41, 0.61], atol=1e-12)

    def test_value_histogram_edges(self):
        """Test edge values stay inside the range"""
        hist = EmpiricalCopulaService.value_histogram([-1.0, 1.0], 0.5)

        assert hist.counts.tolist() == [1, 0, 0, 1]
