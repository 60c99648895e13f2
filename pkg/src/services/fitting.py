"""
Fitting service: least squares comparison of analytic and empirical copula densities

The correlation c is never fitted; it is pinned to the empirical mean
correlation. N (K-copula) and (nu, gamma) (skewed t) are found by a coarse
scan, golden-section refinement and a bounded polish that is kept only when
it lowers the loss.
"""

import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import optimize

from ..config import (
    DEFAULT_GAMMA_RANGE,
    DEFAULT_N_RANGE,
    DEFAULT_NU_RANGE,
    GOLDEN_SCAN_POINTS,
)
from ..exceptions import FitFailureError, NumericalError, ParameterError
from ..models import (
    MODEL_NAMES,
    ComparisonRow,
    ComparisonTable,
    CopulaGrid,
    CopulaHistogram,
    CorrelationSet,
    FitResult,
    GaussianModel,
    KModel,
    LossReport,
    SkewedTModel,
    TracePoint,
)
from .analytic import AnalyticCopulaService


Binned = Union[CopulaHistogram, CopulaGrid]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQUARE = (3.0 - math.sqrt(5.0)) / 2.0

N_TOL = 0.05
NU_TOL = 0.05
GAMMA_TOL = 0.005
MAX_SWEEPS = 6

# Mean correlations are pulled inside this bound before building models
MAX_ABS_CORRELATION = 0.999


def _check_same_bins(a: Binned, b: Binned) -> None:
    if a.bins != b.bins:
        raise ParameterError(f"grids differ in bins: {a.bins} vs {b.bins}")


def _clip_correlation(c: float) -> float:
    if abs(c) > MAX_ABS_CORRELATION:
        clipped = math.copysign(MAX_ABS_CORRELATION, c)
        logger.warning(f"Mean correlation {c:.6f} clipped to {clipped} for the analytic models")
        return clipped
    return c


class _Objective:
    """Memoized loss of a parametrized family against one empirical histogram"""

    def __init__(self, empirical: Binned, build: Callable[..., object], names: Sequence[str]):
        self.empirical = empirical
        self.build = build
        self.names = tuple(names)
        self.trace: List[TracePoint] = []
        self._cache: Dict[Tuple[float, ...], float] = {}
        self.stage = "scan"

    def __call__(self, *params: float) -> float:
        key = tuple(float(p) for p in params)
        if key in self._cache:
            return self._cache[key]
        try:
            grid = AnalyticCopulaService.evaluate_grid(self.build(*key), self.empirical.bins)
            loss = CopulaFitService.lms_loss(self.empirical, grid)
        except NumericalError as e:
            logger.warning(f"Loss evaluation failed at {dict(zip(self.names, key))}: {e}")
            loss = math.inf
        if not math.isfinite(loss):
            loss = math.inf
        self._cache[key] = loss
        self.trace.append(TracePoint(parameters=dict(zip(self.names, key)), loss=loss, stage=self.stage))
        logger.debug(f"{self.stage} {dict(zip(self.names, key))}: loss {loss:.6g}")
        return loss

    @property
    def evaluations(self) -> int:
        return len(self._cache)

    def best(self) -> Tuple[Tuple[float, ...], float]:
        key = min(self._cache, key=self._cache.get)
        return key, self._cache[key]


def _scan_bracket(points: np.ndarray, i: int) -> Tuple[float, float]:
    return float(points[max(i - 1, 0)]), float(points[min(i + 1, len(points) - 1)])


def _check_range(name: str, bounds: Tuple[float, float]) -> None:
    if not bounds[0] < bounds[1]:
        raise ParameterError(f"{name} must be an increasing interval, got {bounds}")


class CopulaFitService:
    """Least-squares comparison and fitting of analytic copulas to empirical histograms"""

    @staticmethod
    def lms_loss(empirical: Binned, analytic: Binned) -> float:
        """Sum over all B^2 cells of the squared density difference"""
        _check_same_bins(empirical, analytic)
        diff = empirical.density - analytic.density
        return float(np.sum(diff * diff))

    @staticmethod
    def loss_report(empirical: Binned, analytic: Binned) -> LossReport:
        """Loss under the sum and mean conventions plus the per-cell probability form"""
        total = CopulaFitService.lms_loss(empirical, analytic)
        cells = empirical.bins ** 2
        return LossReport(
            bins=empirical.bins,
            sum=total,
            mean=total / cells,
            probability_sum=total / cells ** 2,
        )

    @staticmethod
    def difference_grid(empirical: Binned, analytic: CopulaGrid) -> CopulaGrid:
        """Empirical minus analytic density in the shared grid schema"""
        _check_same_bins(empirical, analytic)
        return CopulaGrid(
            bins=empirical.bins,
            density=empirical.density - analytic.density,
            model=analytic.model,
            kind="difference",
            sample_count=getattr(empirical, "sample_count", None),
        )

    @staticmethod
    def golden_section(
        f: Callable[[float], float],
        a: float,
        b: float,
        tol: float,
    ) -> Tuple[float, float, List[Tuple[float, float]]]:
        """
        Golden-section minimisation of a unimodal function on [a, b]

        Args:
            f: Objective
            a, b: Bracket
            tol: Final bracket width

        Returns:
            Tuple of (argmin, minimum, evaluated (x, f(x)) points)
        """
        a, b = min(a, b), max(a, b)
        trace: List[Tuple[float, float]] = []

        def g(x: float) -> float:
            y = f(x)
            trace.append((x, y))
            return y

        h = b - a
        if h <= tol:
            x = 0.5 * (a + b)
            return x, g(x), trace

        steps = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
        c = a + INV_PHI_SQUARE * h
        d = a + INV_PHI * h
        yc, yd = g(c), g(d)
        for _ in range(steps - 1):
            if yc < yd:
                b, d, yd = d, c, yc
                h *= INV_PHI
                c = a + INV_PHI_SQUARE * h
                yc = g(c)
            else:
                a, c, yc = c, d, yd
                h *= INV_PHI
                d = a + INV_PHI * h
                yd = g(d)
        x, y = min(trace, key=lambda t: t[1])
        return x, y, trace

    @staticmethod
    def fit_k_copula(
        empirical: Binned,
        c: float,
        n_range: Tuple[float, float] = DEFAULT_N_RANGE,
        tol: float = N_TOL,
    ) -> FitResult:
        """
        Least squares fit of the K-copula fluctuation parameter N at fixed c

        Args:
            empirical: Empirical copula histogram
            c: Mean correlation (held fixed)
            n_range: Search interval for N
            tol: Final golden-section bracket width

        Returns:
            FitResult with the scan, golden-section and polish trace
        """
        _check_range("n_range", n_range)
        if n_range[0] <= 0.0:
            raise ParameterError(f"n_range must be positive, got {n_range}")
        objective = _Objective(empirical, lambda n: KModel(c=c, n=n), ("N",))

        scan = np.geomspace(n_range[0], n_range[1], GOLDEN_SCAN_POINTS)
        losses = np.array([objective(n) for n in scan])
        if not np.any(np.isfinite(losses)):
            raise FitFailureError(f"K-copula loss is non-finite at every scan point in {n_range}")
        lo, hi = _scan_bracket(scan, int(np.argmin(losses)))

        objective.stage = "golden"
        CopulaFitService.golden_section(objective, lo, hi, tol)

        objective.stage = "polish"
        (n_best,), loss_best = objective.best()
        a, b = max(lo, n_best - tol), min(hi, n_best + tol)
        if b > a:
            optimize.minimize_scalar(objective, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
        (n_best,), loss_best = objective.best()
        if math.isclose(n_best, n_range[0]) or math.isclose(n_best, n_range[1]):
            logger.warning(f"Fitted N={n_best:.4f} lies on the search boundary {n_range}")

        result = FitResult(
            model=KModel(c=c, n=n_best),
            loss=loss_best,
            evaluations=objective.evaluations,
            converged=True,
            loss_curve=objective.trace,
        )
        logger.info(f"K-copula fit: N={n_best:.4f}, loss {loss_best:.6g} after {result.evaluations} evaluations")
        return result

    @staticmethod
    def fit_skewed_t(
        empirical: Binned,
        c: float,
        nu_range: Tuple[float, float] = DEFAULT_NU_RANGE,
        gamma_range: Tuple[float, float] = DEFAULT_GAMMA_RANGE,
        nu_tol: float = NU_TOL,
        gamma_tol: float = GAMMA_TOL,
    ) -> FitResult:
        """
        Least squares fit of (nu, gamma) of the skewed t copula at fixed c

        A 16 x 16 scan (log-spaced nu, linear gamma) seeds coordinate descent
        by golden section, followed by a bounded Nelder-Mead polish.
        """
        _check_range("nu_range", nu_range)
        _check_range("gamma_range", gamma_range)
        if nu_range[0] <= 2.0:
            raise ParameterError(f"nu_range must lie above 2, got {nu_range}")
        objective = _Objective(
            empirical,
            lambda nu, gamma: SkewedTModel(c=c, nu=nu, gamma=gamma),
            ("nu", "gamma"),
        )

        nus = np.geomspace(nu_range[0], nu_range[1], GOLDEN_SCAN_POINTS)
        gammas = np.linspace(gamma_range[0], gamma_range[1], GOLDEN_SCAN_POINTS)
        losses = np.array([[objective(nu, g) for g in gammas] for nu in nus])
        if not np.any(np.isfinite(losses)):
            raise FitFailureError("skewed t loss is non-finite at every scan point")
        i, j = np.unravel_index(int(np.argmin(losses)), losses.shape)
        nu_lo, nu_hi = _scan_bracket(nus, i)
        g_lo, g_hi = _scan_bracket(gammas, j)

        objective.stage = "golden"
        nu, gamma = float(nus[i]), float(gammas[j])
        converged = False
        for sweep in range(MAX_SWEEPS):
            nu_new, _, _ = CopulaFitService.golden_section(lambda x: objective(x, gamma), nu_lo, nu_hi, nu_tol)
            gamma_new, _, _ = CopulaFitService.golden_section(lambda y: objective(nu_new, y), g_lo, g_hi, gamma_tol)
            moved_nu, moved_gamma = abs(nu_new - nu), abs(gamma_new - gamma)
            nu, gamma = nu_new, gamma_new
            if moved_nu <= nu_tol and moved_gamma <= gamma_tol:
                converged = True
                break
        logger.debug(f"Coordinate descent stopped after {sweep + 1} sweeps")

        objective.stage = "polish"
        (nu, gamma), _ = objective.best()
        bounds = [
            (max(nu_lo, nu - nu_tol), min(nu_hi, nu + nu_tol)),
            (max(g_lo, gamma - gamma_tol), min(g_hi, gamma + gamma_tol)),
        ]
        optimize.minimize(
            lambda p: objective(p[0], p[1]),
            x0=np.array([nu, gamma]),
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-10, "fatol": 1e-18, "maxiter": 400},
        )
        (nu, gamma), loss_best = objective.best()

        result = FitResult(
            model=SkewedTModel(c=c, nu=nu, gamma=gamma),
            loss=loss_best,
            evaluations=objective.evaluations,
            converged=converged,
            loss_curve=objective.trace,
        )
        logger.info(
            f"Skewed t fit: nu={nu:.4f}, gamma={gamma:.5f}, loss {loss_best:.6g} "
            f"after {result.evaluations} evaluations"
        )
        return result

    @staticmethod
    def model_comparison(
        empirical: CopulaHistogram,
        corrs: CorrelationSet,
        models: Sequence[str] = MODEL_NAMES,
        n_range: Tuple[float, float] = DEFAULT_N_RANGE,
        nu_range: Tuple[float, float] = DEFAULT_NU_RANGE,
        gamma_range: Tuple[float, float] = DEFAULT_GAMMA_RANGE,
        correlation_bin_width: Optional[float] = None,
    ) -> ComparisonTable:
        """
        Compare the analytic families against one empirical copula histogram

        Args:
            empirical: Averaged empirical copula density
            corrs: Pair correlations; their mean pins c, their histogram the CWG weights
            models: Families to include
            n_range, nu_range, gamma_range: Fit intervals
            correlation_bin_width: CWG histogram bin width

        Returns:
            ComparisonTable with loss rows, analytic grids and difference grids
        """
        if not models:
            raise ParameterError("model list must not be empty")
        unknown = [m for m in models if m not in MODEL_NAMES]
        if unknown:
            raise ParameterError(f"unknown models {unknown}; choose from {list(MODEL_NAMES)}")

        c = _clip_correlation(corrs.mean_correlation)
        rows: List[ComparisonRow] = []
        grids: Dict[str, CopulaGrid] = {}
        differences: Dict[str, CopulaGrid] = {}
        for name in models:
            fit = None
            if name == "gaussian":
                model = GaussianModel(c=c)
            elif name == "cwg":
                model = AnalyticCopulaService.cwg_from_correlations(corrs, correlation_bin_width)
            elif name == "k":
                fit = CopulaFitService.fit_k_copula(empirical, c, n_range)
                model = fit.model
            else:
                fit = CopulaFitService.fit_skewed_t(empirical, c, nu_range, gamma_range)
                model = fit.model
            grid = AnalyticCopulaService.evaluate_grid(model, empirical.bins)
            report = CopulaFitService.loss_report(empirical, grid)
            rows.append(ComparisonRow(name=name, model=model, loss=report, fit=fit))
            grids[name] = grid
            differences[name] = CopulaFitService.difference_grid(empirical, grid)
            logger.info(f"{name}: loss sum {report.sum:.6g}, mean {report.mean:.6g}")

        return ComparisonTable(rows=rows, grids=grids, difference_grids=differences)
