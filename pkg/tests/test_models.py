"""
Tests for domain models
"""

from datetime import date

import numpy as np
import pytest
from pydantic import TypeAdapter, ValidationError

from src.exceptions import (
    InsufficientDataError,
    ParameterError,
    QuantileRangeError,
    RejectedInputError,
)
from src.models import (
    ComparisonRow,
    ComparisonTable,
    CopulaHistogram,
    CopulaModel,
    CorrelationSet,
    CWGModel,
    GaussianModel,
    KModel,
    LossReport,
    PriceSeries,
    QuadratureSpec,
    ReturnKind,
    ReturnMatrix,
    RngSpec,
    RunConfig,
    SkewedTModel,
    TabulatedQuantile,
    TailAsymmetry,
    UniformSeries,
    WishartFactor,
)


class TestPriceSeries:
    """Test PriceSeries model"""

    def test_price_series_creation(self):
        """Test creating a price series"""
        series = PriceSeries(ticker="AAA", prices=[100.0, 110.0, 99.0])

        assert series.ticker == "AAA"
        assert len(series) == 3
        assert series.dates is None
        assert not series.prices.flags.writeable

    def test_rejects_non_positive_prices(self):
        """Test non-positive and missing prices are rejected"""
        with pytest.raises(RejectedInputError):
            PriceSeries(ticker="AAA", prices=[100.0, 0.0, 99.0])
        with pytest.raises(RejectedInputError):
            PriceSeries(ticker="AAA", prices=[100.0, float("nan")])

    def test_too_short(self):
        """Test a single price is insufficient"""
        with pytest.raises(InsufficientDataError):
            PriceSeries(ticker="AAA", prices=[100.0])

    def test_dates_must_increase(self):
        """Test date ordering is enforced"""
        with pytest.raises(RejectedInputError):
            PriceSeries(
                ticker="AAA",
                prices=[1.0, 2.0],
                dates=[date(2012, 1, 3), date(2012, 1, 2)],
            )


class TestReturnMatrix:
    """Test ReturnMatrix model"""

    def test_vector_becomes_column(self):
        """Test a 1-D input is stored as a single column"""
        matrix = ReturnMatrix(values=[0.1, -0.1], tickers=["AAA"])

        assert matrix.values.shape == (2, 1)
        assert matrix.n_obs == 2
        assert matrix.n_assets == 1
        assert matrix.n_pairs == 0

    def test_window_only_for_local_kind(self):
        """Test the window accompanies locally normalized returns only"""
        with pytest.raises(ParameterError):
            ReturnMatrix(values=[[0.1]], tickers=["A"], kind=ReturnKind.LOCALLY_NORMALIZED)
        with pytest.raises(ParameterError):
            ReturnMatrix(values=[[0.1]], tickers=["A"], window=13)

        local = ReturnMatrix(values=[[0.1]], tickers=["A"], kind=ReturnKind.LOCALLY_NORMALIZED, window=13)
        assert local.window == 13

    def test_rejects_non_finite(self):
        """Test non-finite entries are rejected"""
        with pytest.raises(RejectedInputError):
            ReturnMatrix(values=[[0.1, np.inf]], tickers=["A", "B"])

    def test_ticker_count(self):
        """Test ticker count must match columns"""
        with pytest.raises(RejectedInputError):
            ReturnMatrix(values=[[0.1, 0.2]], tickers=["A"])


class TestCorrelationSet:
    """Test CorrelationSet model"""

    def test_pairs_and_mean(self):
        """Test pair listing and mean correlation"""
        corrs = CorrelationSet(
            tickers=["A", "B", "C"],
            index_k=[0, 0, 1],
            index_l=[1, 2, 2],
            values=[0.2, 0.4, 0.6],
        )

        assert len(corrs) == 3
        assert corrs.pairs[0] == (0, 1, 0.2)
        assert corrs.mean_correlation == pytest.approx(0.4)

    def test_wrong_pair_count(self):
        """Test exactly K(K-1)/2 pairs are required"""
        with pytest.raises(RejectedInputError):
            CorrelationSet(tickers=["A", "B", "C"], index_k=[0], index_l=[1], values=[0.5])


class TestCopulaModels:
    """Test the copula model union"""

    def test_discriminated_union(self):
        """Test models are parsed by family tag"""
        adapter = TypeAdapter(CopulaModel)

        model = adapter.validate_python({"family": "k", "c": 0.2, "n": 4.0})
        assert isinstance(model, KModel)
        model = adapter.validate_python({"family": "skewed_t", "c": 0.44, "nu": 3.3, "gamma": 0.06})
        assert isinstance(model, SkewedTModel)
        assert model.parameters() == {"c": 0.44, "nu": 3.3, "gamma": 0.06}

    @pytest.mark.parametrize("c", [-1.0, 1.0, 1.5])
    def test_correlation_bounds(self, c):
        """Test correlations on or outside the unit bounds are rejected"""
        with pytest.raises(ParameterError):
            GaussianModel(c=c)

    def test_parameter_bounds(self):
        """Test N > 0 and nu > 2"""
        with pytest.raises(ParameterError):
            KModel(c=0.2, n=0.0)
        with pytest.raises(ParameterError):
            SkewedTModel(c=0.2, nu=2.0)

    def test_cwg_weights(self):
        """Test CWG weights must be non-negative and sum to one"""
        CWGModel(entries=[(0.2, 0.5), (0.6, 0.5)])
        with pytest.raises(ParameterError):
            CWGModel(entries=[(0.2, 0.5), (0.6, 0.6)])
        with pytest.raises(ParameterError):
            CWGModel(entries=[(0.2, 1.5), (0.6, -0.5)])
        with pytest.raises(ParameterError):
            CWGModel(entries=[])


class TestCopulaHistogram:
    """Test CopulaHistogram model"""

    def test_normalization_enforced(self):
        """Test density must integrate to one"""
        CopulaHistogram(bins=2, density=np.full((2, 2), 1.0), sample_count=4)
        with pytest.raises(RejectedInputError):
            CopulaHistogram(bins=2, density=np.full((2, 2), 2.0), sample_count=4)

    def test_transpose(self):
        """Test transpose swaps axes"""
        hist = CopulaHistogram(bins=2, density=[[2.0, 1.0], [0.0, 1.0]], sample_count=4)

        assert hist.transpose().density.tolist() == [[2.0, 0.0], [1.0, 1.0]]
        assert hist.cell_mass.sum() == pytest.approx(1.0)


class TestUniformSeries:
    """Test UniformSeries model"""

    def test_open_interval(self):
        """Test values must lie strictly inside (0, 1)"""
        UniformSeries(values=[0.25, 0.75])
        with pytest.raises(RejectedInputError):
            UniformSeries(values=[0.0, 0.5])


class TestTailAsymmetry:
    """Test TailAsymmetry model"""

    def test_p_and_q(self):
        """Test p and q are rebuilt from corner masses"""
        tails = TailAsymmetry(lower_lower=0.08, upper_upper=0.06, lower_upper=0.01, upper_lower=0.02)

        assert tails.p == pytest.approx(-0.02)
        assert tails.q == pytest.approx(-0.01)
        assert tails.corner_mass == (0.08, 0.06, 0.01, 0.02)


class TestNumericsModels:
    """Test quadrature and quantile table models"""

    def test_quadrature_spec_bounds(self):
        """Test nodes and tolerance limits"""
        QuadratureSpec(nodes=8, rel_tol=1e-3)
        with pytest.raises(ValidationError):
            QuadratureSpec(nodes=4)
        with pytest.raises(ValidationError):
            QuadratureSpec(rel_tol=0.1)

    def test_tabulated_quantile(self):
        """Test interpolation, bracketing and range checks"""
        grid_x = np.linspace(-1.0, 1.0, 11)
        grid_F = 0.05 + 0.45 * (grid_x + 1.0)
        table = TabulatedQuantile(grid_x=grid_x, grid_F=grid_F)

        assert table.evaluate(0.5) == pytest.approx(0.0, abs=1e-12)
        lo, hi = table.bracket(0.52)
        assert lo <= table.evaluate(0.52) <= hi
        with pytest.raises(QuantileRangeError):
            table.evaluate(0.99)


class TestSamplingModels:
    """Test RngSpec and WishartFactor"""

    def test_streams_reproducible(self):
        """Test identical seeds and streams give identical draws"""
        spec = RngSpec(seed=7)

        a = spec.generator(3).standard_normal(5)
        b = RngSpec(seed=7).generator(3).standard_normal(5)
        c = spec.generator(2).standard_normal(5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_philox(self):
        """Test the counter-based generator is available"""
        gen = RngSpec(seed=7, algorithm="philox").generator()
        assert isinstance(gen.bit_generator, np.random.Philox)

    def test_wishart_covariance(self):
        """Test A A^T / N is symmetric positive semi-definite"""
        a = np.random.Generator(np.random.PCG64(1)).standard_normal((2, 5))
        factor = WishartFactor(a=a, n=5)

        cov = factor.covariance
        assert np.allclose(cov, cov.T)
        assert np.all(np.linalg.eigvalsh(cov) >= -1e-12)


class TestRunConfig:
    """Test RunConfig validation"""

    def test_defaults(self):
        """Test defaults from settings"""
        config = RunConfig()

        assert config.bins == 20
        assert config.window == 13
        assert config.include_current is True
        assert config.models == ["gaussian", "cwg", "k", "skewed_t"]

    @pytest.mark.parametrize(
        "overrides",
        [{"bins": 7}, {"models": []}, {"models": ["clayton"]}, {"n_range": (5.0, 1.0)}, {"window": 1}],
    )
    def test_invalid(self, overrides):
        """Test invalid settings are rejected"""
        with pytest.raises(ValidationError):
            RunConfig(**overrides)

    def test_unknown_keys_rejected(self):
        """Test unknown config keys are rejected"""
        with pytest.raises(ValidationError):
            RunConfig(binz=20)


class TestComparisonTable:
    """Test ComparisonTable helpers"""

    def test_ranking(self):
        """Test rows are ranked by summed loss"""
        rows = [
            ComparisonRow(name="gaussian", model=GaussianModel(c=0.4), loss=LossReport(bins=20, sum=3.0, mean=0.0075, probability_sum=1e-5)),
            ComparisonRow(name="k", model=KModel(c=0.4, n=5.0), loss=LossReport(bins=20, sum=1.0, mean=0.0025, probability_sum=1e-6)),
        ]
        table = ComparisonTable(rows=rows)

        assert table.ranking() == ["k", "gaussian"]
        assert table.row("k").model.n == 5.0
