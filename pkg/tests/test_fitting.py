"""
Tests for least squares losses, golden-section search and copula fits
"""

import math

import numpy as np
import pytest

from src.exceptions import FitFailureError, NumericalError, ParameterError
from src.models import CopulaGrid, CopulaHistogram, GaussianModel, KModel, ReturnMatrix, RngSpec, SkewedTModel
from src.services import (
    AnalyticCopulaService,
    CopulaFitService,
    CopulaSampler,
    EmpiricalCopulaService,
    MarketDataService,
)
from src.services.fitting import MAX_ABS_CORRELATION


def _flat(bins: int) -> CopulaHistogram:
    return CopulaHistogram(bins=bins, density=np.ones((bins, bins)), sample_count=bins * bins)


def _fake_grid(model, bins):
    """Cheap stand-in for evaluate_grid with a known loss minimum"""
    density = np.zeros((bins, bins))
    if isinstance(model, KModel):
        density[0, 0] = model.n
    else:
        density[0, 0] = model.nu
        density[0, 1] = model.gamma + 1.0
    return CopulaGrid(bins=bins, density=density, model=model)


class TestLoss:
    """Test the least squares loss"""

    def test_identical(self):
        """Test identical grids give zero"""
        assert CopulaFitService.lms_loss(_flat(10), _flat(10)) == 0.0

    def test_single_cell(self):
        """Test one differing cell contributes delta squared"""
        density = np.ones((10, 10))
        density[3, 4] += 0.5
        density[6, 1] -= 0.5
        other = CopulaHistogram(bins=10, density=density, sample_count=100)

        assert CopulaFitService.lms_loss(_flat(10), other) == pytest.approx(0.5)

    def test_symmetric(self, k_grid):
        """Test the loss is symmetric in its arguments"""
        gaussian = AnalyticCopulaService.evaluate_grid(GaussianModel(c=0.2), 20)
        assert CopulaFitService.lms_loss(k_grid, gaussian) == CopulaFitService.lms_loss(gaussian, k_grid)

    def test_bin_mismatch(self):
        """Test grids with different bins"""
        with pytest.raises(ParameterError):
            CopulaFitService.lms_loss(_flat(10), _flat(20))

    def test_conventions(self, k_grid):
        """Test sum, mean and probability forms"""
        report = CopulaFitService.loss_report(k_grid, _flat(20))

        assert report.mean == pytest.approx(report.sum / 400)
        assert report.probability_sum == pytest.approx(report.sum / 400 ** 2)

    def test_difference_grid(self, k_grid):
        """Test the difference grid kind and values"""
        diff = CopulaFitService.difference_grid(_flat(20), k_grid)

        assert diff.kind == "difference"
        np.testing.assert_allclose(diff.density, 1.0 - k_grid.density)


class TestGoldenSection:
    """Test the golden-section search"""

    def test_quadratic(self):
        """Test the minimum of a shifted parabola"""
        x, fx, trace = CopulaFitService.golden_section(lambda t: (t - 1.234) ** 2 + 2.0, 0.0, 5.0, 1e-6)

        assert x == pytest.approx(1.234, abs=2e-6)
        assert fx == pytest.approx(2.0, abs=1e-10)
        assert len(trace) < 40

    def test_reversed_bracket(self):
        """Test a reversed bracket"""
        x, _, _ = CopulaFitService.golden_section(lambda t: abs(t + 0.5), 1.0, -2.0, 1e-5)
        assert x == pytest.approx(-0.5, abs=2e-5)

    def test_narrow_bracket(self):
        """Test a bracket already below tolerance"""
        x, _, trace = CopulaFitService.golden_section(lambda t: t, 1.0, 1.001, 0.01)

        assert x == pytest.approx(1.0005)
        assert len(trace) == 1


class TestFitPipeline:
    """Test scan, golden-section and polish stages on a cheap objective"""

    def test_k_stages(self, monkeypatch):
        """Test N is recovered and every stage is traced"""
        monkeypatch.setattr(AnalyticCopulaService, "evaluate_grid", _fake_grid)
        target = np.zeros((10, 10))
        target[0, 0] = 3.7
        result = CopulaFitService.fit_k_copula(CopulaGrid(bins=10, density=target), 0.3, (1.0, 10.0))

        assert result.model.n == pytest.approx(3.7, abs=1e-6)
        assert result.loss < 1e-10
        assert result.converged
        assert {t.stage for t in result.loss_curve} == {"scan", "golden", "polish"}
        assert result.loss <= result.best_scan_loss
        assert result.model.c == 0.3

    def test_skewed_t_stages(self, monkeypatch):
        """Test (nu, gamma) are recovered"""
        monkeypatch.setattr(AnalyticCopulaService, "evaluate_grid", _fake_grid)
        target = np.zeros((10, 10))
        target[0, 0] = 5.5
        target[0, 1] = 1.03
        result = CopulaFitService.fit_skewed_t(CopulaGrid(bins=10, density=target), 0.44, (2.5, 20.0), (-0.2, 0.2))

        assert result.model.nu == pytest.approx(5.5, abs=1e-4)
        assert result.model.gamma == pytest.approx(0.03, abs=1e-4)
        assert result.loss <= result.best_scan_loss

    def test_all_scan_points_fail(self, monkeypatch):
        """Test a fit whose loss is never finite"""

        def failing(model, bins):
            raise NumericalError("quadrature diverged")

        monkeypatch.setattr(AnalyticCopulaService, "evaluate_grid", failing)
        with pytest.raises(FitFailureError):
            CopulaFitService.fit_k_copula(_flat(10), 0.3)

    def test_invalid_ranges(self):
        """Test reversed and out-of-domain ranges"""
        with pytest.raises(ParameterError):
            CopulaFitService.fit_k_copula(_flat(10), 0.3, (5.0, 2.0))
        with pytest.raises(ParameterError):
            CopulaFitService.fit_skewed_t(_flat(10), 0.3, (1.5, 10.0))

    @pytest.mark.slow
    def test_k_self_consistency(self):
        """Test an analytic K grid is fitted back to its own N"""
        empirical = AnalyticCopulaService.evaluate_grid(KModel(c=0.4, n=5.0), 20)
        result = CopulaFitService.fit_k_copula(empirical, 0.4, (2.0, 20.0))

        assert 4.95 <= result.model.n <= 5.05
        assert result.loss < 1e-12

    @pytest.mark.slow
    def test_skewed_t_self_consistency(self):
        """Test an analytic skewed t grid is fitted back to its own parameters"""
        empirical = AnalyticCopulaService.evaluate_grid(SkewedTModel(c=0.44, nu=3.3, gamma=0.06), 20)
        result = CopulaFitService.fit_skewed_t(empirical, 0.44, (2.5, 12.0), (-0.2, 0.2))

        assert result.model.nu == pytest.approx(3.3, abs=0.05)
        assert result.model.gamma == pytest.approx(0.06, abs=0.005)
        assert result.loss < 1e-12


@pytest.mark.slow
class TestSampledRoundTrips:
    """Test fits on sampled data recover the generating parameters for most seeds"""

    @staticmethod
    def _histogram(draws):
        u = EmpiricalCopulaService.to_uniform(draws[:, 0])
        v = EmpiricalCopulaService.to_uniform(draws[:, 1])
        return EmpiricalCopulaService.pairwise_copula(u, v, bins=20)

    def test_k_copula(self):
        """Test N within [4.5, 5.5] for at least 4 of 5 seeds"""
        passes = 0
        for seed in range(5):
            draws = CopulaSampler.sample_k_bivariate(0.4, 5.0, 500_000, RngSpec(seed=seed))
            fit = CopulaFitService.fit_k_copula(self._histogram(draws), 0.4, (2.0, 20.0))
            passes += 4.5 <= fit.model.n <= 5.5

        assert passes >= 4

    def test_skewed_t(self):
        """Test nu within 0.8 and gamma within 0.02 for at least 4 of 5 seeds"""
        passes = 0
        for seed in range(5):
            draws = CopulaSampler.sample_skewed_t_bivariate(0.44, 3.3, 0.06, 500_000, RngSpec(seed=seed))
            fit = CopulaFitService.fit_skewed_t(self._histogram(draws), 0.44, (2.5, 12.0), (-0.2, 0.2))
            passes += abs(fit.model.nu - 3.3) <= 0.8 and abs(fit.model.gamma - 0.06) <= 0.02

        assert passes >= 4


class TestModelComparison:
    """Test the comparison table"""

    def test_gaussian_data(self, gaussian_returns):
        """Test Gaussian data is matched by the Gaussian and CWG models"""
        empirical = EmpiricalCopulaService.averaged_copula(gaussian_returns, bins=10)
        corrs = MarketDataService.correlation_set(gaussian_returns)
        table = CopulaFitService.model_comparison(empirical, corrs, models=["gaussian", "cwg"])

        assert [r.name for r in table.rows] == ["gaussian", "cwg"]
        assert table.row("gaussian").model.c == pytest.approx(corrs.mean_correlation)
        assert table.row("gaussian").loss.sum < CopulaFitService.lms_loss(empirical, _flat(10))
        assert set(table.difference_grids) == {"gaussian", "cwg"}
        assert table.grids["cwg"].bins == 10
        assert set(table.ranking()) == {"gaussian", "cwg"}

    def test_comonotone_stays_finite(self):
        """Test identical columns clip the correlation and keep the loss finite"""
        x = np.sin(np.arange(500.0))
        u = EmpiricalCopulaService.to_uniform(x)
        empirical = EmpiricalCopulaService.pairwise_copula(u, u, bins=10)
        corrs = MarketDataService.correlation_set(ReturnMatrix(values=np.column_stack([x, x]), tickers=["A", "B"]))
        table = CopulaFitService.model_comparison(empirical, corrs, models=["gaussian"])
        row = table.row("gaussian")

        assert row.model.c == MAX_ABS_CORRELATION
        assert math.isfinite(row.loss.sum)

    def test_empty_models(self, gaussian_returns):
        """Test an empty model list"""
        empirical = EmpiricalCopulaService.averaged_copula(gaussian_returns, bins=10)
        with pytest.raises(ParameterError):
            CopulaFitService.model_comparison(empirical, MarketDataService.correlation_set(gaussian_returns), models=[])

    def test_unknown_model(self, gaussian_returns):
        """Test unknown model names"""
        empirical = EmpiricalCopulaService.averaged_copula(gaussian_returns, bins=10)
        with pytest.raises(ParameterError):
            corrs = MarketDataService.correlation_set(gaussian_returns)
            CopulaFitService.model_comparison(empirical, corrs, models=["clayton"])
