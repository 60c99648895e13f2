"""
Fitting models: loss reports, fit results and model comparison tables
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from .copula import CopulaGrid, CopulaModel


class LossReport(BaseModel):
    """Squared deviations between an empirical histogram and an analytic grid"""

    model_config = ConfigDict(frozen=True)

    bins: int
    sum: float = Field(..., ge=0.0)
    mean: float = Field(..., ge=0.0)
    probability_sum: float = Field(..., ge=0.0)


class TracePoint(BaseModel):
    """One loss evaluation during a fit"""

    model_config = ConfigDict(frozen=True)

    parameters: Dict[str, float]
    loss: float
    stage: str = "scan"


class FitResult(BaseModel):
    """Outcome of a least squares copula fit"""

    model_config = ConfigDict(frozen=True)

    model: CopulaModel
    loss: float = Field(..., ge=0.0)
    evaluations: int = Field(..., ge=0)
    converged: bool
    loss_curve: List[TracePoint] = Field(default_factory=list)

    @property
    def best_scan_loss(self) -> float:
        scanned = [t.loss for t in self.loss_curve if t.stage == "scan"]
        return min(scanned) if scanned else float("inf")


class ComparisonRow(BaseModel):
    """Loss of one analytic copula against the empirical histogram"""

    model_config = ConfigDict(frozen=True)

    name: str
    model: CopulaModel
    loss: LossReport
    fit: Optional[FitResult] = None


class ComparisonTable(BaseModel):
    """Rows per analytic family plus their difference grids"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rows: List[ComparisonRow]
    grids: Dict[str, CopulaGrid] = Field(default_factory=dict)
    difference_grids: Dict[str, CopulaGrid] = Field(default_factory=dict)

    def row(self, name: str) -> ComparisonRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def ranking(self) -> List[str]:
        """Row names ordered by increasing summed loss"""
        return [r.name for r in sorted(self.rows, key=lambda r: r.loss.sum)]
