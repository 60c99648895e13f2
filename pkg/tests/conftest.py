"""
Pytest configuration and fixtures for copuladep tests
"""

import os

import numpy as np
import pandas as pd
import pytest

# Set test environment
os.environ["COPULADEP_ENVIRONMENT"] = "test"
os.environ["COPULADEP_LOG_TO_FILE"] = "false"

from src.models import KModel, ReturnMatrix, RngSpec  # noqa: E402
from src.services import AnalyticCopulaService  # noqa: E402


@pytest.fixture
def rng():
    """Seeded generator"""
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def rng_spec():
    """Seeded RngSpec"""
    return RngSpec(seed=20140101)


@pytest.fixture
def price_frame():
    """Wide price frame with 3 tickers and 10 business days"""
    dates = pd.bdate_range("2012-01-02", periods=10)
    data = {
        "AAA": [100.0, 101.0, 99.5, 100.2, 102.0, 101.1, 103.4, 104.0, 102.7, 103.3],
        "BBB": [50.0, 50.5, 49.9, 50.4, 51.2, 50.8, 51.9, 52.3, 51.7, 52.0],
        "CCC": [20.0, 19.8, 20.3, 20.1, 20.6, 20.2, 20.9, 21.1, 20.7, 21.4],
    }
    return pd.DataFrame(data, index=[d.date() for d in dates])


@pytest.fixture
def wide_csv(tmp_path, price_frame):
    """Wide-form price CSV"""
    path = tmp_path / "wide.csv"
    frame = price_frame.copy()
    frame.insert(0, "date", [d.isoformat() for d in frame.index])
    frame.to_csv(path, index=False)
    return path


@pytest.fixture
def long_csv(tmp_path, price_frame):
    """Long-form price CSV with the same content as wide_csv"""
    path = tmp_path / "long.csv"
    rows = [
        {"date": d.isoformat(), "ticker": ticker, "adjusted_close": price_frame.loc[d, ticker]}
        for ticker in price_frame.columns
        for d in price_frame.index
    ]
    pd.DataFrame(rows).to_csv(path, index=False)
    return path


@pytest.fixture
def gaussian_returns(rng):
    """ReturnMatrix with 4 correlated Gaussian columns"""
    cov = np.full((4, 4), 0.4) + 0.6 * np.eye(4)
    values = rng.multivariate_normal(np.zeros(4), cov, size=4000)
    return ReturnMatrix(values=values, tickers=["A", "B", "C", "D"])


@pytest.fixture(scope="session")
def k_grid():
    """Analytic K-copula grid at c = 0.2, N = 4, B = 20"""
    return AnalyticCopulaService.evaluate_grid(KModel(c=0.2, n=4.0), 20)
