"""
Market data service: price ingestion, returns, local normalization and correlations
"""

from datetime import date
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from numpy.lib.stride_tricks import sliding_window_view

from ..config import settings
from ..exceptions import (
    DegenerateSeriesError,
    DegenerateWindowError,
    InsufficientDataError,
    ParameterError,
    ParseError,
    RejectedInputError,
)
from ..models import CorrelationSet, PriceSeries, ReturnKind, ReturnMatrix


LONG_FORM_PRICE_COLUMNS = ("adjusted_close", "adj_close", "close", "price")

# Diagnostic tolerances for locally normalized columns
DIAGNOSTIC_MIN_LENGTH = 250
DIAGNOSTIC_MEAN_TOL = 0.1
DIAGNOSTIC_VAR_TOL = 0.15


def _is_constant(x: np.ndarray) -> bool:
    return bool(np.ptp(x) == 0.0)


def _iso_date(text: object) -> Optional[date]:
    try:
        return date.fromisoformat(str(text).strip())
    except ValueError:
        return None


def _source_lines(path: Path, rows: int) -> pd.Index:
    """File line number of each data row; comment and blank lines are not rows"""
    with open(path, encoding="utf-8") as f:
        numbers = [i for i, line in enumerate(f, start=1) if line.strip() and not line.lstrip().startswith("#")]
    if len(numbers) != rows + 1:
        return pd.RangeIndex(2, rows + 2)
    return pd.Index(numbers[1:])


def _first_line(mask: pd.Series) -> int:
    return int(mask.index[mask.to_numpy()][0])


def _parse_dates(raw: pd.Series, path: Path) -> pd.Series:
    # datetime.date rather than pd.Timestamp: long synthetic runs pass the year 2262
    dates = raw.map(_iso_date)
    bad = dates.isna()
    if bad.any():
        line = _first_line(bad)
        raise ParseError(f"unparseable date {raw.loc[line]!r}", path=str(path), line=line)
    return dates


def _parse_prices(raw: pd.Series, path: Path, ticker: str) -> pd.Series:
    values = pd.to_numeric(raw, errors="coerce")
    garbled = values.isna() & raw.notna() & (raw.astype(str).str.strip() != "")
    if garbled.any():
        line = _first_line(garbled)
        raise ParseError(f"{ticker}: unparseable price {raw.loc[line]!r}", path=str(path), line=line)
    non_positive = values <= 0.0
    if non_positive.any():
        line = _first_line(non_positive)
        raise RejectedInputError(f"{path}:{line}: {ticker}: non-positive price {values.loc[line]}")
    return values


def _series_from_frame(ticker: str, dates: pd.Series, prices: pd.Series, path: Path) -> PriceSeries:
    frame = pd.DataFrame({"date": dates.to_numpy(), "price": prices.to_numpy()}, index=dates.index)
    frame = frame.dropna(subset=["price"])
    duplicated = frame["date"].duplicated()
    if duplicated.any():
        line = _first_line(duplicated)
        raise ParseError(f"{ticker}: duplicate date {frame.loc[line, 'date']}", path=str(path), line=line)
    frame = frame.sort_values("date")
    return PriceSeries(
        ticker=ticker,
        prices=frame["price"].to_numpy(dtype=float),
        dates=list(frame["date"]),
    )


class MarketDataService:
    """Price ingestion, returns, local normalization and correlations"""

    @staticmethod
    def load_prices(path: Union[str, Path]) -> Dict[str, PriceSeries]:
        """
        Load adjusted closing prices from CSV

        Long form (date, ticker, adjusted_close) and wide form (date, one column
        per ticker) are detected from the header. Empty cells in wide form are
        treated as missing observations.

        Args:
            path: CSV file

        Returns:
            Price series keyed by ticker, in file order
        """
        path = Path(path)
        if not path.exists():
            raise ParseError("file not found", path=str(path))
        try:
            frame = pd.read_csv(path, dtype=str, skipinitialspace=True, comment="#")
        except pd.errors.EmptyDataError:
            raise ParseError("file is empty", path=str(path), line=1)
        except pd.errors.ParserError as e:
            raise ParseError(f"malformed CSV: {e}", path=str(path))
        frame.index = _source_lines(path, len(frame))

        columns = {c.strip().lower(): c for c in frame.columns}
        if "date" not in columns:
            raise ParseError("header must contain a 'date' column", path=str(path), line=1)
        dates = _parse_dates(frame[columns["date"]], path)

        series: Dict[str, PriceSeries] = {}
        price_column = next((columns[c] for c in LONG_FORM_PRICE_COLUMNS if c in columns), None)
        if "ticker" in columns and price_column is not None:
            tickers = frame[columns["ticker"]].str.strip()
            if tickers.isna().any():
                raise ParseError("missing ticker", path=str(path), line=_first_line(tickers.isna()))
            for ticker in tickers.unique():
                rows = tickers == ticker
                prices = _parse_prices(frame.loc[rows, price_column], path, ticker)
                series[ticker] = _series_from_frame(ticker, dates[rows], prices, path)
            layout = "long"
        else:
            for column in frame.columns:
                if column == columns["date"]:
                    continue
                ticker = column.strip()
                prices = _parse_prices(frame[column], path, ticker)
                series[ticker] = _series_from_frame(ticker, dates, prices, path)
            layout = "wide"

        if not series:
            raise InsufficientDataError(f"{path}: no price columns found")
        logger.info(f"Loaded {len(series)} tickers from {path} ({layout} form)")
        return series

    @staticmethod
    def align_prices(
        series: Dict[str, PriceSeries],
        tolerance: Optional[float] = None,
    ) -> Tuple[Optional[List[date]], np.ndarray, List[str]]:
        """
        Inner-join price series on common dates

        Tickers missing more than `tolerance` of all observed dates are dropped
        with a warning before the join.

        Returns:
            Tuple of (common dates, T x K price matrix, kept tickers)
        """
        if not series:
            raise InsufficientDataError("no price series to align")
        tolerance = settings.missing_date_tolerance if tolerance is None else tolerance

        if any(s.dates is None for s in series.values()):
            lengths = {len(s) for s in series.values()}
            if len(lengths) != 1:
                raise RejectedInputError("undated price series must all have the same length")
            tickers = list(series)
            return None, np.column_stack([series[t].prices for t in tickers]), tickers

        all_dates = set()
        for s in series.values():
            all_dates.update(s.dates)

        kept = []
        for ticker, s in series.items():
            missing = 1.0 - len(s.dates) / len(all_dates)
            if missing > tolerance:
                logger.warning(f"Dropping {ticker}: missing {missing:.2%} of {len(all_dates)} dates")
                continue
            kept.append(ticker)
        if not kept:
            raise InsufficientDataError(f"every ticker misses more than {tolerance:.2%} of the dates")

        frame = pd.concat(
            [pd.Series(series[t].prices, index=series[t].dates, name=t) for t in kept],
            axis=1,
            join="inner",
        ).sort_index()
        if len(frame) < 2:
            raise InsufficientDataError(f"only {len(frame)} common dates after alignment")
        logger.info(f"Aligned {len(kept)} tickers on {len(frame)} common dates")
        return list(frame.index), frame.to_numpy(dtype=float), kept

    @staticmethod
    def compute_returns(prices: Union[PriceSeries, Sequence[float], np.ndarray]) -> np.ndarray:
        """
        Original returns r(t) = (S(t+1) - S(t)) / S(t)

        Args:
            prices: PriceSeries or positive price vector of length >= 2

        Returns:
            Returns, one shorter than the input
        """
        if not isinstance(prices, PriceSeries):
            prices = PriceSeries(ticker="series", prices=prices)
        s = prices.prices
        return np.diff(s) / s[:-1]

    @staticmethod
    def local_normalize(
        returns: Union[Sequence[float], np.ndarray],
        window: Optional[int] = None,
        include_current: bool = True,
    ) -> np.ndarray:
        """
        Standardize returns by their rolling mean and population standard deviation

        With include_current the window for time t is {t-window+1, ..., t} and
        the output has length T - window + 1; otherwise the window strictly
        precedes t and the output has length T - window.

        Args:
            returns: Return column
            window: Window length (>= 2)
            include_current: Whether the window contains the normalized observation

        Returns:
            Locally normalized returns
        """
        window = settings.default_window if window is None else window
        if window < 2:
            raise ParameterError(f"window must be at least 2, got {window}")
        r = np.asarray(returns, dtype=float)
        if r.ndim != 1:
            raise RejectedInputError("local_normalize expects a single return column")
        needed = window if include_current else window + 1
        if len(r) < needed:
            raise InsufficientDataError(f"{len(r)} returns are too few for window {window}")

        if include_current:
            windows = sliding_window_view(r, window)
            current = r[window - 1:]
            offset = window - 1
        else:
            windows = sliding_window_view(r[:-1], window)
            current = r[window:]
            offset = window

        mu = windows.mean(axis=1)
        sigma = np.sqrt(((windows - mu[:, None]) ** 2).mean(axis=1))
        scale = np.max(np.abs(windows), axis=1)
        degenerate = sigma <= 8.0 * np.finfo(float).eps * scale
        if np.any(degenerate):
            t = int(np.flatnonzero(degenerate)[0]) + offset
            raise DegenerateWindowError(f"locally constant returns in the window ending at t={t}", t=t)
        return (current - mu) / sigma

    @staticmethod
    def build_return_matrix(
        prices: np.ndarray,
        tickers: List[str],
        kind: ReturnKind = ReturnKind.ORIGINAL,
        window: Optional[int] = None,
        include_current: bool = True,
        dates: Optional[List[date]] = None,
    ) -> ReturnMatrix:
        """
        Return matrix from a T x K price matrix

        Args:
            prices: Aligned prices, one column per ticker
            tickers: Column labels
            kind: Original or locally normalized returns
            window: Local normalization window
            include_current: Local window convention
            dates: Price dates; return dates are the later endpoint of each step

        Returns:
            ReturnMatrix
        """
        prices = np.asarray(prices, dtype=float)
        if prices.ndim == 1:
            prices = prices[:, None]
        columns = []
        for k, ticker in enumerate(tickers):
            r = MarketDataService.compute_returns(PriceSeries(ticker=ticker, prices=prices[:, k]))
            if kind == ReturnKind.LOCALLY_NORMALIZED:
                window = settings.default_window if window is None else window
                try:
                    r = MarketDataService.local_normalize(r, window, include_current)
                except DegenerateWindowError as e:
                    logger.error(f"{ticker}: {e}")
                    raise DegenerateWindowError(f"{ticker}: {e}", t=e.t)
            columns.append(r)

        values = np.column_stack(columns)
        return_dates = list(dates[-len(values):]) if dates is not None else None
        matrix = ReturnMatrix(
            values=values,
            tickers=list(tickers),
            kind=kind,
            window=window if kind == ReturnKind.LOCALLY_NORMALIZED else None,
            dates=return_dates,
        )
        if kind == ReturnKind.LOCALLY_NORMALIZED:
            MarketDataService.check_normalization(matrix)
        logger.info(f"Built {kind.value} return matrix with {matrix.n_obs} rows and {matrix.n_assets} columns")
        return matrix

    @staticmethod
    def check_normalization(matrix: ReturnMatrix) -> List[str]:
        """
        Warn about locally normalized columns whose moments drift from (0, 1)

        Only samples of at least DIAGNOSTIC_MIN_LENGTH rows are checked.

        Returns:
            Tickers outside tolerance
        """
        if matrix.n_obs < DIAGNOSTIC_MIN_LENGTH:
            return []
        flagged = []
        for ticker, mean, var in matrix.moment_diagnostics():
            if abs(mean) > DIAGNOSTIC_MEAN_TOL or abs(var - 1.0) > DIAGNOSTIC_VAR_TOL:
                logger.warning(f"{ticker}: locally normalized mean {mean:.3f}, variance {var:.3f}")
                flagged.append(ticker)
        return flagged

    @staticmethod
    def pearson_correlation(x: Union[Sequence[float], np.ndarray], y: Union[Sequence[float], np.ndarray]) -> float:
        """
        Pearson correlation coefficient, exactly symmetric in its arguments

        Args:
            x, y: Equal-length columns with nonzero variance

        Returns:
            Correlation in [-1, 1]
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ParameterError(f"columns must be equal-length vectors, got {x.shape} and {y.shape}")
        if len(x) < 2:
            raise InsufficientDataError("correlation needs at least 2 observations")
        for name, col in (("x", x), ("y", y)):
            if _is_constant(col):
                raise DegenerateSeriesError(f"column {name} has zero variance", column=name)
        xc = x - x.mean()
        yc = y - y.mean()
        denominator = np.sqrt(np.sum(xc * xc) * np.sum(yc * yc))
        if denominator == 0.0:
            raise DegenerateSeriesError("columns have vanishing variance")
        c = np.sum(xc * yc) / denominator
        return float(np.clip(c, -1.0, 1.0))

    @staticmethod
    def correlation_set(matrix: ReturnMatrix) -> CorrelationSet:
        """Pearson correlations of all column pairs k < l"""
        if matrix.n_assets < 2:
            raise InsufficientDataError(f"need at least 2 columns, got {matrix.n_assets}")
        values = matrix.values
        for k, ticker in enumerate(matrix.tickers):
            if _is_constant(values[:, k]):
                raise DegenerateSeriesError(f"column {ticker} has zero variance", column=ticker)

        centered = values - values.mean(axis=0)
        gram = centered.T @ centered
        ss = np.diag(gram)
        corr = np.clip(gram / np.sqrt(np.outer(ss, ss)), -1.0, 1.0)
        index_k, index_l = np.triu_indices(matrix.n_assets, k=1)
        result = CorrelationSet(
            tickers=matrix.tickers,
            index_k=index_k,
            index_l=index_l,
            values=corr[index_k, index_l],
        )
        logger.info(f"Mean correlation over {len(result)} pairs: {result.mean_correlation:.4f}")
        return result
