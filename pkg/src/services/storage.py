"""
Storage service: every file format written or read by the pipeline

Grids (empirical histograms, analytic and difference grids) share one
schema: a headerless B x B CSV, row i = u-bin and column j = v-bin, plus a
JSON sidecar with the same stem.
"""

import json
from datetime import date
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import TypeAdapter, ValidationError

from ..exceptions import ParseError
from ..models import (
    AsymmetryReport,
    ComparisonTable,
    CopulaGrid,
    CopulaHistogram,
    CopulaModel,
    CorrelationSet,
    FitResult,
    LossConvention,
    ReturnKind,
    ReturnMatrix,
    ValueHistogram,
)


Binned = Union[CopulaHistogram, CopulaGrid]

FLOAT_FORMAT = "%.17g"
SYNTHETIC_START_DATE = "2000-01-03"

_model_adapter = TypeAdapter(CopulaModel)


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload) -> Path:
    path = _ensure_parent(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


class StorageService:
    """CSV and JSON persistence of grids, return matrices and reports"""

    @staticmethod
    def sidecar_path(path: Union[str, Path]) -> Path:
        return Path(path).with_suffix(".json")

    @staticmethod
    def grid_metadata(grid: Binned) -> dict:
        """JSON sidecar contents of a grid"""
        model = getattr(grid, "model", None)
        return {
            "bins": grid.bins,
            "kind": grid.kind,
            "model": model.family if model is not None else None,
            "parameters": model.model_dump(mode="json") if model is not None else None,
            "sample_count": grid.sample_count,
            "pair_count": getattr(grid, "pair_count", None),
        }

    @staticmethod
    def write_grid(path: Union[str, Path], grid: Binned) -> Path:
        """
        Write a grid as CSV plus JSON sidecar

        Args:
            path: CSV path; the sidecar replaces the suffix with .json
            grid: CopulaHistogram or CopulaGrid

        Returns:
            CSV path
        """
        path = _ensure_parent(Path(path))
        pd.DataFrame(grid.density).to_csv(path, header=False, index=False, float_format=FLOAT_FORMAT)
        _write_json(StorageService.sidecar_path(path), StorageService.grid_metadata(grid))
        logger.debug(f"Wrote {grid.kind} grid with {grid.bins} bins to {path}")
        return path

    @staticmethod
    def read_grid(path: Union[str, Path]) -> Binned:
        """Read a grid CSV and its sidecar back into the matching model"""
        path = Path(path)
        meta_path = StorageService.sidecar_path(path)
        if not path.exists():
            raise ParseError("grid file not found", path=str(path))
        if not meta_path.exists():
            raise ParseError("grid sidecar not found", path=str(meta_path))
        try:
            meta = json.loads(meta_path.read_text())
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", path=str(meta_path), line=e.lineno)
        try:
            density = pd.read_csv(path, header=None, dtype=float, float_precision="round_trip").to_numpy()
        except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ParseError(f"malformed grid: {e}", path=str(path))

        try:
            if meta.get("kind") in ("analytic", "difference"):
                model = _model_adapter.validate_python(meta["parameters"]) if meta.get("parameters") else None
                return CopulaGrid(
                    bins=meta["bins"],
                    density=density,
                    model=model,
                    kind=meta["kind"],
                    sample_count=meta.get("sample_count"),
                )
            return CopulaHistogram(
                bins=meta["bins"],
                density=density,
                sample_count=meta["sample_count"],
                pair_count=meta.get("pair_count") or 1,
                kind=meta.get("kind", "empirical"),
            )
        except (KeyError, ValidationError) as e:
            raise ParseError(f"inconsistent grid sidecar: {e}", path=str(meta_path))

    @staticmethod
    def write_return_matrix(path: Union[str, Path], matrix: ReturnMatrix) -> Path:
        """Wide CSV with a '# kind=..., window=...' metadata line"""
        path = _ensure_parent(Path(path))
        frame = pd.DataFrame(matrix.values, columns=matrix.tickers)
        if matrix.dates is not None:
            frame.insert(0, "date", [d.isoformat() for d in matrix.dates])
        window = matrix.window if matrix.window is not None else "none"
        with open(path, "w", newline="") as f:
            f.write(f"# kind={matrix.kind.value}, window={window}\n")
            frame.to_csv(f, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote {matrix.kind.value} returns ({matrix.n_obs} x {matrix.n_assets}) to {path}")
        return path

    @staticmethod
    def read_return_matrix(path: Union[str, Path]) -> ReturnMatrix:
        """Read a matrix written by write_return_matrix"""
        path = Path(path)
        if not path.exists():
            raise ParseError("file not found", path=str(path))
        with open(path) as f:
            header = f.readline().strip()
        if not header.startswith("#"):
            raise ParseError("missing '# kind=..., window=...' header", path=str(path), line=1)
        meta = {}
        for item in header.lstrip("#").split(","):
            key, _, value = item.strip().partition("=")
            meta[key] = value
        try:
            kind = ReturnKind(meta.get("kind", ""))
        except ValueError:
            raise ParseError(f"unknown return kind {meta.get('kind')!r}", path=str(path), line=1)
        window = None if meta.get("window", "none") == "none" else int(meta["window"])

        frame = pd.read_csv(path, skiprows=1, float_precision="round_trip")
        dates = None
        if "date" in frame.columns:
            dates = [date.fromisoformat(d) for d in frame.pop("date")]
        return ReturnMatrix(
            values=frame.to_numpy(dtype=float),
            tickers=list(frame.columns),
            kind=kind,
            window=window,
            dates=dates,
        )

    @staticmethod
    def write_prices(
        path: Union[str, Path],
        tickers: Sequence[str],
        prices: np.ndarray,
        dates: Optional[List[date]] = None,
    ) -> Path:
        """Wide price CSV readable by load_prices; business days are generated when no dates are given"""
        path = _ensure_parent(Path(path))
        if dates is None:
            offsets = np.busday_offset(np.datetime64(SYNTHETIC_START_DATE), np.arange(len(prices)), roll="forward")
            dates = [d.item() for d in offsets]
        frame = pd.DataFrame(prices, columns=list(tickers))
        frame.insert(0, "date", [d.isoformat() for d in dates])
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote {len(tickers)} price columns of length {len(prices)} to {path}")
        return path

    @staticmethod
    def write_asymmetry(path: Union[str, Path], report: AsymmetryReport) -> Path:
        """CSV of (ticker_k, ticker_l, p, q)"""
        path = _ensure_parent(Path(path))
        pd.DataFrame(
            {"ticker_k": report.ticker_k, "ticker_l": report.ticker_l, "p": report.p, "q": report.q}
        ).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return path

    @staticmethod
    def write_value_histogram(path: Union[str, Path], hist: ValueHistogram) -> Path:
        """CSV of bin centre, count, relative weight and density"""
        path = _ensure_parent(Path(path))
        pd.DataFrame(
            {"center": hist.centers, "count": hist.counts, "weight": hist.weights, "density": hist.density}
        ).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return path

    @staticmethod
    def write_correlations(path: Union[str, Path], corrs: CorrelationSet) -> Path:
        """CSV of (ticker_k, ticker_l, c)"""
        path = _ensure_parent(Path(path))
        pd.DataFrame(
            {
                "ticker_k": [corrs.tickers[k] for k in corrs.index_k],
                "ticker_l": [corrs.tickers[l] for l in corrs.index_l],
                "c": corrs.values,
            }
        ).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return path

    @staticmethod
    def comparison_records(table: ComparisonTable) -> List[dict]:
        records = []
        for row in table.rows:
            params = row.model.parameters()
            records.append(
                {
                    "model": row.name,
                    "parameters": params,
                    "loss_sum": row.loss.sum,
                    "loss_mean": row.loss.mean,
                    "loss_probability_sum": row.loss.probability_sum,
                    "evaluations": row.fit.evaluations if row.fit else 0,
                    "converged": row.fit.converged if row.fit else True,
                }
            )
        return records

    @staticmethod
    def write_comparison(
        csv_path: Union[str, Path],
        json_path: Union[str, Path],
        table: ComparisonTable,
        convention: LossConvention = LossConvention.SUM,
    ) -> Path:
        """
        Comparison table as CSV and JSON, ranked by the chosen loss convention

        Both conventions are always written; the convention only orders rows.
        """
        records = StorageService.comparison_records(table)
        key = "loss_sum" if convention == LossConvention.SUM else "loss_mean"
        records.sort(key=lambda r: r[key])

        flat = []
        for r in records:
            row = {k: v for k, v in r.items() if k != "parameters"}
            row["parameters"] = ";".join(f"{k}={v:.10g}" for k, v in r["parameters"].items())
            flat.append(row)
        csv_path = _ensure_parent(Path(csv_path))
        pd.DataFrame(flat).to_csv(csv_path, index=False, float_format=FLOAT_FORMAT)
        _write_json(Path(json_path), {"convention": convention.value, "rows": records})
        logger.info(f"Wrote comparison of {len(records)} models to {csv_path}")
        return csv_path

    @staticmethod
    def write_trace(path: Union[str, Path], fit: FitResult) -> Path:
        """Fit trace as CSV with one column per parameter, then loss and stage"""
        path = _ensure_parent(Path(path))
        rows = [{**point.parameters, "loss": point.loss, "stage": point.stage} for point in fit.loss_curve]
        pd.DataFrame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return path
